//! Knowledge-graph retrieval and generation for telecom network state.
//!
//! The crate builds an ontology-validated knowledge graph from documents,
//! logs, and streaming telemetry, trains a translational embedding model to
//! propose missing links, retrieves the graph facts most relevant to a
//! natural-language question, and assembles a grounded prompt whose answer
//! can be audited claim by claim against the graph.
//!
//! Modules mirror the pipeline stages: [`ontology`] defines the schema,
//! [`store`] holds provenance-bearing triples with supersession semantics,
//! and the remaining stages build on those two.

pub mod audit;
pub mod demo;
pub mod dynamics;
pub mod engine;
pub mod genclient;
pub mod ingest;
pub mod linkpred;
pub mod ontology;
pub mod retrieval;
pub mod service;
pub mod store;
mod text;
pub mod verbalize;

pub use audit::{
    audit_answer, audit_answers, audit_claim, load_answers, read_answers_jsonl, AnswerAudit,
    AnswerRecord, AuditError, AuditLabel, AuditReport, AuditVerdict, Claim, LabelCounts,
};
pub use demo::{
    build_graph, bundled_aliases, bundled_extraction_rules, bundled_extractor,
    bundled_generation_rules, bundled_ontology, bundled_templates, demo_documents, demo_engine,
    demo_graph, demo_probes, demo_queries, demo_seed_triples, demo_stream, generate_probes,
    generate_stream, probes_to_jsonl, stream_to_jsonl, synthetic_corpus, DemoError,
    SyntheticCorpus, DEMO_K, DEMO_STREAM_LEN,
};
pub use dynamics::{
    apply_to_graph, load_probes, load_stream, measure_costs, read_probes_jsonl,
    read_stream_jsonl, run_bench, ApplySummary, BenchMode, BenchOptions, BenchReport, CostInputs,
    CostReport, DynamicsError, EventApplier, EventKind, LatencyStats, PollSample, PollVerdict,
    Probe, ProbeTrace, UpdateEvent,
};
pub use engine::{
    BackendChoice, CitationEntry, Engine, EngineConfig, EngineError, EvidenceScore, QueryBundle,
    QueryResponse,
};
pub use genclient::{
    timed_generate, validate_citations, Answer, GenError, GenerationBackend, HttpBackend,
    MockBackend, MockRule, ABSTAIN_ANSWER,
};
pub use ingest::{
    chunk_document, extract_model, extract_rules, ingest_document, normalize, AliasTable,
    CandidateObject, CandidateTriple, DocumentChunk, ExtractionRule, ExtractorBackend,
    IngestError, IngestOptions, IngestReport, MockExtractor, ModelExtraction, NormalizeReport,
    RawCandidate, RejectedCandidate, RuleSet,
};
pub use linkpred::{
    admit, hits_at_k, propose, toy_chain, AdmitReport, EmbeddingConfig, HitsReport,
    LinkPredError, Proposal, ProposeOptions, TransEModel,
};
pub use ontology::{LiteralDomain, Ontology, OntologyError, SemanticClass, Signature, TailType};
pub use retrieval::{
    classify_query, index_text, retrieve, DualEncoder, Encoder, HashEncoder, QueryContext,
    RankedEvidence, RetrievalError, RetrieveOptions, SurfaceForms, TripleIndex, Weights,
};
pub use service::{router, serve, ServiceError, ServiceState};
pub use store::{
    schema_admissible, InsertOutcome, KgSnapshot, KnowledgeGraph, Literal, Node, Provenance,
    SourceFamily, StoreError, Triple, TripleId,
};
pub use verbalize::{build_prompt, Prompt, Template, TemplateSet, VerbalizeError};
