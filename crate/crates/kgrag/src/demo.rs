//! Bundled demonstration scenario and synthetic corpus generators.
//!
//! Everything needed to run the engine out of the box lives here: the
//! ontology, sentence templates, alias table, extraction and generation
//! rules, two source documents, the Slice-27 topology, a 200-event update
//! stream with matching probes, and seeded generators for larger graphs.

use std::sync::Arc;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::dynamics::{read_probes_jsonl, read_stream_jsonl, DynamicsError, EventKind, Probe, UpdateEvent};
use crate::engine::{Engine, EngineError};
use crate::genclient::{GenError, MockBackend};
use crate::ingest::{
    ingest_document, AliasTable, IngestError, IngestOptions, MockExtractor, RuleSet,
};
use crate::ontology::{Ontology, OntologyError};
use crate::retrieval::Weights;
use crate::store::{
    KnowledgeGraph, Literal, Node, Provenance, SourceFamily, StoreError, Triple,
};
use crate::verbalize::{TemplateSet, VerbalizeError};

/// Retrieval depth used by the bundled engine. Wide enough that both the
/// suitability and the latency evidence of the slice-selection question land
/// in the prompt on the full demonstration graph.
pub const DEMO_K: usize = 12;

/// Events in the bundled update stream.
pub const DEMO_STREAM_LEN: usize = 200;

/// Seconds between consecutive bundled stream events.
pub const STREAM_SPACING_S: i64 = 10;

pub const SST_CATALOG_URI: &str = "doc://sst-catalog";
pub const SLICE_PROFILE_URI: &str = "doc://slice-profile";

pub const ONTOLOGY_JSON: &str = include_str!("../data/ontology.json");
pub const TEMPLATES_JSON: &str = include_str!("../data/templates.json");
pub const ALIASES_JSON: &str = include_str!("../data/aliases.json");
pub const EXTRACTION_RULES_JSON: &str = include_str!("../data/rules.json");
pub const EXTRACTOR_FIXTURES_JSON: &str = include_str!("../data/mock_extractor.json");
pub const GENERATION_RULES_JSON: &str = include_str!("../data/gen_rules.json");
pub const SST_CATALOG_TXT: &str = include_str!("../data/docs/sst_catalog.txt");
pub const SLICE_PROFILE_TXT: &str = include_str!("../data/docs/slice_profile.txt");
pub const TOPOLOGY_JSONL: &str = include_str!("../data/triples/slice27_topology.jsonl");
pub const STREAM_JSONL: &str = include_str!("../data/stream/slice27_events.jsonl");
pub const PROBES_JSONL: &str = include_str!("../data/probes/slice27_probes.jsonl");

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("ontology: {0}")]
    Ontology(#[from] OntologyError),
    #[error("templates: {0}")]
    Verbalize(#[from] VerbalizeError),
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("store: {0}")]
    Store(#[from] StoreError),
    #[error("generation rules: {0}")]
    Generation(#[from] GenError),
    #[error("stream: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

pub fn bundled_ontology() -> Result<Arc<Ontology>, DemoError> {
    Ok(Arc::new(Ontology::from_json(ONTOLOGY_JSON)?))
}

pub fn bundled_templates() -> Result<TemplateSet, DemoError> {
    Ok(TemplateSet::from_json(TEMPLATES_JSON)?)
}

pub fn bundled_aliases() -> Result<AliasTable, DemoError> {
    Ok(AliasTable::from_json(ALIASES_JSON)?)
}

pub fn bundled_extraction_rules(ontology: &Ontology) -> Result<RuleSet, DemoError> {
    Ok(RuleSet::from_json(EXTRACTION_RULES_JSON, ontology)?)
}

pub fn bundled_extractor() -> Result<MockExtractor, DemoError> {
    Ok(MockExtractor::from_json(EXTRACTOR_FIXTURES_JSON)?)
}

pub fn bundled_generation_rules() -> Result<MockBackend, DemoError> {
    Ok(MockBackend::from_json(GENERATION_RULES_JSON)?)
}

/// Document ingestion in the demo is pinned to a fixed revision date so two
/// builds of the graph compare equal, dumps included.
fn demo_ingest_options() -> IngestOptions {
    IngestOptions {
        revision_date: Utc.with_ymd_and_hms(2025, 4, 10, 9, 0, 0).unwrap(),
        ..IngestOptions::default()
    }
}

fn demo_graph_with(ontology: Arc<Ontology>) -> Result<KnowledgeGraph, DemoError> {
    let (mut kg, _) = KnowledgeGraph::load(Arc::clone(&ontology), TOPOLOGY_JSONL)?;
    let rules = bundled_extraction_rules(&ontology)?;
    let aliases = bundled_aliases()?;
    let extractor = bundled_extractor()?;
    let opts = demo_ingest_options();
    ingest_document(
        &mut kg,
        SST_CATALOG_URI,
        SST_CATALOG_TXT,
        SourceFamily::Spec,
        &rules,
        &aliases,
        Some(&extractor),
        &opts,
    )?;
    ingest_document(
        &mut kg,
        SLICE_PROFILE_URI,
        SLICE_PROFILE_TXT,
        SourceFamily::Spec,
        &rules,
        &aliases,
        Some(&extractor),
        &opts,
    )?;
    Ok(kg)
}

/// The Slice-27 graph: network topology plus the facts extracted from the
/// two bundled documents.
pub fn demo_graph() -> Result<KnowledgeGraph, DemoError> {
    demo_graph_with(bundled_ontology()?)
}

/// A ready-to-query engine over the Slice-27 graph with the bundled rule
/// backend and default ranking weights.
pub fn demo_engine() -> Result<Engine, DemoError> {
    let ontology = bundled_ontology()?;
    let kg = demo_graph_with(Arc::clone(&ontology))?;
    let rules = bundled_extraction_rules(&ontology)?;
    let backend = Arc::new(bundled_generation_rules()?);
    Ok(Engine::new(
        kg,
        bundled_templates()?,
        bundled_aliases()?,
        rules,
        backend,
        Weights::DEFAULT,
        DEMO_K,
    )?)
}

/// The bundled documents as (uri, text, family) rows, ready for ingestion
/// or cost measurement.
pub fn demo_documents() -> Vec<(String, String, SourceFamily)> {
    vec![
        (SST_CATALOG_URI.to_string(), SST_CATALOG_TXT.to_string(), SourceFamily::Spec),
        (SLICE_PROFILE_URI.to_string(), SLICE_PROFILE_TXT.to_string(), SourceFamily::Spec),
    ]
}

/// The bundled topology facts as insert-ready triples.
pub fn demo_seed_triples() -> Result<Vec<Triple>, DemoError> {
    let (kg, _) = KnowledgeGraph::load(bundled_ontology()?, TOPOLOGY_JSONL)?;
    Ok(kg.live_triples().cloned().collect())
}

pub fn demo_stream() -> Result<Vec<UpdateEvent>, DemoError> {
    Ok(read_stream_jsonl(STREAM_JSONL)?)
}

pub fn demo_probes() -> Result<Vec<Probe>, DemoError> {
    Ok(read_probes_jsonl(PROBES_JSONL)?)
}

/// The query suite the bundled rule backend answers with citations.
pub fn demo_queries() -> Vec<&'static str> {
    vec![
        "Which slice type should I configure for a service requiring under 50 ms latency?",
        "Which SST for URLLC?",
        "What was the last change before Slice 27 degraded?",
        "How much throughput does gNodeB-42 provide?",
        "Which QoS identifier is assigned to the SliceProfile?",
    ]
}

fn stream_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 7, 15, 3, 15, 0).unwrap()
}

const BANDS: [&str; 4] = ["n78", "n77", "n79", "n41"];
const POLICIES: [&str; 3] = ["priority-throughput", "balanced-class", "best-effort"];

/// Deterministic update stream over the Slice-27 topology. Every event is an
/// effective state change: values are cycled so no event repeats the value
/// currently live for its target.
pub fn generate_stream(len: usize) -> Vec<UpdateEvent> {
    let start = stream_start();
    (0..len)
        .map(|i| {
            let cycle = i / 5;
            let (target, kind) = match i % 5 {
                0 => (
                    "gNodeB-43",
                    EventKind::SpectrumReassign { band: BANDS[cycle % BANDS.len()].to_string() },
                ),
                1 => ("gNodeB-42", EventKind::TiltAdjust { degrees: (cycle % 10) as i64 + 1 }),
                2 => ("UPF-X", EventKind::UpfScale { cpu_share: 10 + 5 * (cycle % 12) as i64 }),
                3 => (
                    "Slice_27",
                    EventKind::SlicePolicyChange {
                        policy: POLICIES[cycle % POLICIES.len()].to_string(),
                    },
                ),
                _ => ("gNodeB-43", EventKind::TiltAdjust { degrees: (cycle % 8) as i64 + 2 }),
            };
            UpdateEvent {
                event_id: format!("evt-{:03}", i + 1),
                timestamp: start + Duration::seconds(STREAM_SPACING_S * i as i64),
                target: target.to_string(),
                kind,
            }
        })
        .collect()
}

/// Probes over the first four stream events, one per event kind. Expected
/// answers are the plain (uncited) forms the bundled rule backend produces
/// before and after the triggering event.
pub fn generate_probes() -> Vec<Probe> {
    let probe = |query: &str, pre: &str, post: &str, event_id: &str| Probe {
        query: query.to_string(),
        pre_expected: pre.to_string(),
        post_expected: post.to_string(),
        event_id: event_id.to_string(),
    };
    vec![
        probe(
            "What was the last change recorded on gNodeB-43?",
            "The latest change on gNodeB-43 was a spectrum reassignment to band n77 at 02:00 UTC.",
            "The latest change on gNodeB-43 was a spectrum reassignment to band n78 at 03:15 UTC.",
            "evt-001",
        ),
        probe(
            "What is the antenna tilt on gNodeB-42?",
            "The antenna tilt on gNodeB-42 is 4 degrees.",
            "The antenna tilt on gNodeB-42 is 1 degrees.",
            "evt-002",
        ),
        probe(
            "What is the CPU share on UPF-X?",
            "UPF-X runs at a CPU share of 40 percent.",
            "UPF-X runs at a CPU share of 10 percent.",
            "evt-003",
        ),
        probe(
            "What is the active policy on Slice 27?",
            "Slice 27 runs under the gold-tier policy.",
            "Slice 27 runs under the priority-throughput policy.",
            "evt-004",
        ),
    ]
}

/// One event per line, in stream order.
pub fn stream_to_jsonl(events: &[UpdateEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("events serialize"));
        out.push('\n');
    }
    out
}

/// One probe per line.
pub fn probes_to_jsonl(probes: &[Probe]) -> String {
    let mut out = String::new();
    for p in probes {
        out.push_str(&serde_json::to_string(p).expect("probes serialize"));
        out.push('\n');
    }
    out
}

/// A seeded synthetic corpus: schema-clean triples over generated network
/// entities plus query texts phrased against the same entity pool.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub triples: Vec<Triple>,
    pub queries: Vec<String>,
}

/// Generate `n_triples` distinct triples and `n_queries` queries from one
/// seed. Facts are unique by construction: every (subject, relation) pair
/// appears at most once, so building a graph from them never supersedes.
pub fn synthetic_corpus(n_triples: usize, n_queries: usize, seed: u64) -> SyntheticCorpus {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    // Grow entity pools until the fact enumeration can cover the request.
    let mut g = 4usize;
    let (g, u, m, s) = loop {
        let u = g / 2 + 1;
        let m = u / 2 + 1;
        let s = (g * 3 / 4).max(3);
        if 5 * g + 5 * u + m + 6 * s + 9 >= n_triples {
            break (g, u, m, s);
        }
        g += 4;
    };

    let int = |v: i64| Node::Literal(Literal::Integer(v));
    let rate = |v: f64| Node::Literal(Literal::RateMbps(v));
    let text = |v: String| Node::Literal(Literal::Text(v));

    let mut facts: Vec<(String, String, Node)> = Vec::new();
    for i in 1..=g {
        let e = format!("gNodeB-{i}");
        facts.push((e.clone(), "serves".into(), Node::entity(format!("Slice_{}", rng.gen_range(1..=s)))));
        facts.push((e.clone(), "connected_to".into(), Node::entity(format!("UPF-{}", rng.gen_range(1..=u)))));
        facts.push((e.clone(), "throughput".into(), rate(rng.gen_range(100..=1200) as f64)));
        facts.push((e.clone(), "tilt_deg".into(), int(rng.gen_range(0..=12))));
        facts.push((e, "last_change".into(), text(format!("maintenance pass {}", rng.gen_range(1..=999)))));
    }
    for i in 1..=u {
        let e = format!("UPF-{i}");
        facts.push((e.clone(), "serves".into(), Node::entity(format!("Slice_{}", rng.gen_range(1..=s)))));
        facts.push((e.clone(), "connected_to".into(), Node::entity(format!("MEC-{}", rng.gen_range(1..=m)))));
        facts.push((e.clone(), "throughput".into(), rate(rng.gen_range(200..=2000) as f64)));
        facts.push((e.clone(), "cpu_share".into(), int(rng.gen_range(5..=95))));
        facts.push((e, "last_change".into(), text(format!("scaling pass {}", rng.gen_range(1..=999)))));
    }
    for i in 1..=m {
        facts.push((format!("MEC-{i}"), "serves".into(), Node::entity(format!("Slice_{}", rng.gen_range(1..=s)))));
    }
    const TIERS: [&str; 4] = ["gold-tier", "silver-tier", "bronze-tier", "best-effort"];
    for i in 1..=s {
        let e = format!("Slice_{i}");
        facts.push((e.clone(), "have".into(), Node::entity(format!("SliceProfile-{i}"))));
        facts.push((e.clone(), "identified_by".into(), int(i as i64)));
        facts.push((e.clone(), "policy".into(), text(TIERS[rng.gen_range(0..TIERS.len())].to_string())));
        facts.push((e, "last_change".into(), text(format!("policy review {}", rng.gen_range(1..=999)))));
        let p = format!("SliceProfile-{i}");
        const LATENCIES: [i64; 6] = [5, 10, 20, 50, 100, 150];
        facts.push((p.clone(), "max_latency".into(), Node::Literal(Literal::DurationMs(LATENCIES[rng.gen_range(0..LATENCIES.len())]))));
        facts.push((p, "qos_class".into(), Node::entity(format!("FiveQI_{}", rng.gen_range(1..=92)))));
    }
    for (sst, svc) in [("SST_1", "eMBB"), ("SST_2", "URLLC"), ("SST_3", "mIoT")] {
        facts.push((sst.to_string(), "suitable_for".into(), Node::entity(svc)));
        facts.push((svc.to_string(), "mapped_to".into(), Node::entity(sst)));
    }
    for (i, sst) in ["SST_1", "SST_2", "SST_3"].iter().enumerate() {
        facts.push((sst.to_string(), "identified_by".into(), int(i as i64 + 1)));
    }

    facts.shuffle(&mut rng);
    facts.truncate(n_triples);

    let base = Utc.with_ymd_and_hms(2025, 3, 1, 0, 0, 0).unwrap();
    let triples = facts
        .into_iter()
        .enumerate()
        .map(|(i, (subject, relation, object))| {
            let when = base + Duration::minutes(i as i64);
            Triple::extracted(
                subject,
                relation,
                object,
                Provenance {
                    doc_uri: format!("synthetic://corpus/{}", i + 1),
                    paragraph: (i % 9 + 1) as u32,
                    source_family: SourceFamily::Synthetic,
                    revision_date: when,
                },
                when,
            )
        })
        .collect();

    let mut queries = Vec::with_capacity(n_queries);
    for _ in 0..n_queries {
        let q = match rng.gen_range(0..10u8) {
            0 => format!("What is the antenna tilt on gNodeB-{}?", rng.gen_range(1..=g)),
            1 => format!("Which slice does gNodeB-{} serve?", rng.gen_range(1..=g)),
            2 => format!("How much throughput does UPF-{} provide?", rng.gen_range(1..=u)),
            3 => format!("What is the CPU share on UPF-{}?", rng.gen_range(1..=u)),
            4 => format!("What is the maximum latency of SliceProfile-{}?", rng.gen_range(1..=s)),
            5 => format!("Which QoS class is assigned to SliceProfile-{}?", rng.gen_range(1..=s)),
            6 => format!("What is the active policy on Slice_{}?", rng.gen_range(1..=s)),
            7 => format!("What was the last change recorded on MEC-{}?", rng.gen_range(1..=m)),
            8 => "Which SST is suitable for URLLC deployments?".to_string(),
            _ => format!(
                "Is gNodeB-{} connected to UPF-{}?",
                rng.gen_range(1..=g),
                rng.gen_range(1..=u)
            ),
        };
        queries.push(q);
    }

    SyntheticCorpus { triples, queries }
}

/// Insert a triple list into a fresh graph over the given ontology.
pub fn build_graph(
    ontology: Arc<Ontology>,
    triples: &[Triple],
) -> Result<KnowledgeGraph, DemoError> {
    let mut kg = KnowledgeGraph::new(ontology);
    for t in triples {
        kg.insert(t.clone())?;
    }
    Ok(kg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run_bench, BenchMode, BenchOptions};
    use crate::retrieval::QueryContext;
    use crate::store::{compute_id, InsertOutcome};

    const FIG_QUERY: &str =
        "Which slice type should I configure for a service requiring under 50 ms latency?";

    #[test]
    fn bundled_fixtures_parse() {
        let ontology = bundled_ontology().unwrap();
        assert!(bundled_templates().unwrap().len() >= 14);
        bundled_aliases().unwrap();
        bundled_extractor().unwrap();
        assert!(bundled_extraction_rules(&ontology).unwrap().len() >= 5);
        assert_eq!(bundled_generation_rules().unwrap().len(), 13);
    }

    #[test]
    fn demo_graph_assembles_topology_and_documents() {
        let kg = demo_graph().unwrap();
        assert_eq!(kg.live_triples().count(), 32, "20 topology rows + 12 document facts");
        assert_eq!(kg.entities().get("gNodeB-42").map(String::as_str), Some("gNodeB"));
        assert_eq!(kg.entities().get("Doc-TS23501").map(String::as_str), Some("Document"));
        assert!(kg.has_live("SST_2", "suitable_for", &Node::entity("URLLC")));
        assert!(kg.has_live("Slice_27", "policy", &Node::Literal(Literal::Text("gold-tier".into()))));
        assert!(kg.has_live(
            "gNodeB-43",
            "last_change",
            &Node::Literal(Literal::Text(
                "spectrum reassign to n77 at 2025-07-15T02:00:00Z".into()
            ))
        ));
    }

    #[test]
    fn demo_graph_builds_are_equal() {
        assert_eq!(demo_graph().unwrap(), demo_graph().unwrap());
    }

    #[test]
    fn latency_question_cites_suitability_and_profile_evidence() {
        let engine = demo_engine().unwrap();
        let response = engine.respond(FIG_QUERY, &QueryContext::empty()).unwrap();
        assert!(
            response.answer.starts_with("Configure the slice as SST Type 2 (URLLC)."),
            "unexpected answer: {}",
            response.answer
        );
        assert!(response
            .answer
            .contains("This satisfies the 50 ms latency requirement defined in the slice profile."));
        let cited: Vec<&str> = response.citations.iter().map(|c| c.triple_id.as_str()).collect();
        let suitability = compute_id("SST_2", "suitable_for", &Node::entity("URLLC")).to_hex();
        let latency =
            compute_id("SliceProfile", "max_latency", &Node::Literal(Literal::DurationMs(50)))
                .to_hex();
        assert!(cited.contains(&suitability.as_str()), "missing suitability citation");
        assert!(cited.contains(&latency.as_str()), "missing latency citation");
    }

    #[test]
    fn every_demo_query_returns_cited_answers() {
        let engine = demo_engine().unwrap();
        for query in demo_queries() {
            let response = engine.respond(query, &QueryContext::empty()).unwrap();
            assert!(!response.citations.is_empty(), "no citations for: {query}");
            for c in &response.citations {
                assert!(!c.doc_uri.is_empty(), "empty doc_uri for: {query}");
                assert!(c.paragraph >= 1, "missing paragraph for: {query}");
                assert!(engine.kg().get(crate::store::TripleId::from_hex(&c.triple_id).unwrap()).is_some());
            }
        }
    }

    #[test]
    fn bundled_stream_matches_generator_and_parses() {
        let generated = stream_to_jsonl(&generate_stream(DEMO_STREAM_LEN));
        if std::env::var_os("KGRAG_REGEN").is_some() {
            let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/stream/slice27_events.jsonl");
            std::fs::write(path, &generated).unwrap();
            return;
        }
        assert_eq!(STREAM_JSONL, generated, "bundled stream file is out of date");
        let events = demo_stream().unwrap();
        assert_eq!(events.len(), DEMO_STREAM_LEN);
        assert_eq!(events[0].event_id, "evt-001");
        assert_eq!(events[0].target, "gNodeB-43");
    }

    #[test]
    fn bundled_probes_match_generator_and_parse() {
        let generated = probes_to_jsonl(&generate_probes());
        if std::env::var_os("KGRAG_REGEN").is_some() {
            let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/probes/slice27_probes.jsonl");
            std::fs::write(path, &generated).unwrap();
            return;
        }
        assert_eq!(PROBES_JSONL, generated, "bundled probe file is out of date");
        let probes = demo_probes().unwrap();
        assert_eq!(probes.len(), 4);
    }

    #[test]
    fn dynamic_bench_on_bundled_scenario_is_exact() {
        let engine = demo_engine().unwrap();
        let events = demo_stream().unwrap();
        let probes = demo_probes().unwrap();
        let opts = BenchOptions::default();

        let dynamic = run_bench(&engine, &events, &probes, BenchMode::Dynamic, &opts).unwrap();
        assert_eq!(dynamic.post_change_accuracy, 1.0);
        assert_eq!(dynamic.staleness_rate, 0.0);
        assert_eq!(dynamic.delay_median_s, Some(opts.poll_interval_s as f64));
        assert_eq!(dynamic.events_applied, events.len());

        let fixed = run_bench(&engine, &events, &probes, BenchMode::Static, &opts).unwrap();
        assert_eq!(fixed.post_change_accuracy, 0.0);
        assert_eq!(fixed.staleness_rate, 1.0);
        assert_eq!(fixed.events_applied, 0);
        assert!(fixed.delay_median_s.is_none());
    }

    #[test]
    fn synthetic_corpus_is_schema_clean_and_seed_stable() {
        let corpus = synthetic_corpus(500, 100, 7);
        assert_eq!(corpus.triples.len(), 500);
        assert_eq!(corpus.queries.len(), 100);

        let kg = build_graph(bundled_ontology().unwrap(), &corpus.triples).unwrap();
        assert_eq!(kg.live_triples().count(), 500);
        let mut check = KnowledgeGraph::new(bundled_ontology().unwrap());
        for t in &corpus.triples {
            assert!(matches!(check.insert(t.clone()).unwrap(), InsertOutcome::Inserted { .. }));
        }

        let again = synthetic_corpus(500, 100, 7);
        assert_eq!(corpus.triples, again.triples);
        assert_eq!(corpus.queries, again.queries);
        let other = synthetic_corpus(500, 100, 8);
        assert_ne!(corpus.queries, other.queries);
    }
}
