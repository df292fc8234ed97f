//! End-to-end query engine and its file-backed configuration.
//!
//! An [`Engine`] owns one knowledge-graph revision together with the vector
//! index, verbalization templates, alias table, and generation backend
//! needed to answer a question. `answer_query` composes retrieve, prompt
//! assembly, generation, and citation validation into one traceable bundle;
//! errors carry the stage they came from. Mutations go through
//! [`Engine::mutate`] so the index can never drift from the graph.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genclient::{
    validate_citations, Answer, GenError, GenerationBackend, HttpBackend, MockBackend,
};
use crate::ingest::{AliasTable, IngestError, RuleSet};
use crate::linkpred::{LinkPredError, DEFAULT_TAU};
use crate::ontology::Ontology;
use crate::retrieval::{
    retrieve, DualEncoder, QueryContext, RankedEvidence, RetrievalError, RetrieveOptions,
    TripleIndex, Weights,
};
use crate::store::{KnowledgeGraph, Node, StoreError};
use crate::verbalize::{build_prompt, Prompt, TemplateSet, VerbalizeError};

/// Evidence lines fed to the generator per query unless configured.
pub const DEFAULT_K: usize = 12;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("config: {0}")]
    Config(String),
    #[error("ingest stage: {0}")]
    Ingest(#[from] IngestError),
    #[error("store stage: {0}")]
    Store(#[from] StoreError),
    #[error("link prediction stage: {0}")]
    LinkPred(#[from] LinkPredError),
    #[error("retrieval stage: {0}")]
    Retrieval(#[from] RetrievalError),
    #[error("verbalization stage: {0}")]
    Verbalize(#[from] VerbalizeError),
    #[error("generation stage: {0}")]
    Generation(GenError),
    #[error("citation integrity, answer quarantined: {0}")]
    CitationIntegrity(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Which generation backend the engine talks to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigPaths {
    pub ontology: PathBuf,
    pub templates: PathBuf,
    pub aliases: PathBuf,
    pub rules: PathBuf,
    /// Triple dump loaded at startup; starts empty when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub store: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub w_sim: f64,
    pub w_ont: f64,
    pub w_ctx: f64,
    pub k: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        let w = Weights::DEFAULT;
        RetrievalConfig { w_sim: w.sim, w_ont: w.ont, w_ctx: w.ctx, k: DEFAULT_K }
    }
}

impl RetrievalConfig {
    pub fn weights(&self) -> Weights {
        Weights { sim: self.w_sim, ont: self.w_ont, ctx: self.w_ctx }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkpredConfig {
    pub tau: f64,
}

impl Default for LinkpredConfig {
    fn default() -> Self {
        LinkpredConfig { tau: DEFAULT_TAU }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MockConfig {
    pub rules_path: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HttpConfig {
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub bind: String,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { bind: "127.0.0.1:8080".to_string() }
    }
}

/// File-backed engine configuration (TOML). Relative paths are resolved
/// against the config file's own directory at load time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EngineConfig {
    #[serde(default)]
    pub backend: BackendChoice,
    pub paths: ConfigPaths,
    #[serde(default)]
    pub retrieval: RetrievalConfig,
    #[serde(default)]
    pub linkpred: LinkpredConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock: Option<MockConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub http: Option<HttpConfig>,
    #[serde(default)]
    pub service: ServiceConfig,
}

impl EngineConfig {
    pub fn from_toml(text: &str) -> Result<Self, EngineError> {
        toml::from_str(text).map_err(|e| EngineError::Config(e.to_string()))
    }

    /// Parse, resolve relative paths against the config's directory, and
    /// validate. The returned config is ready for [`Engine::from_config`].
    pub fn load(path: impl AsRef<Path>) -> Result<Self, EngineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            config.resolve_paths(dir);
        }
        config.validate()?;
        Ok(config)
    }

    /// Rebase every relative path onto `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut self.paths.ontology);
        rebase(&mut self.paths.templates);
        rebase(&mut self.paths.aliases);
        rebase(&mut self.paths.rules);
        if let Some(store) = &mut self.paths.store {
            rebase(store);
        }
        if let Some(mock) = &mut self.mock {
            rebase(&mut mock.rules_path);
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        self.retrieval
            .weights()
            .validate()
            .map_err(|e| EngineError::Config(e.to_string()))?;
        if self.retrieval.k == 0 {
            return Err(EngineError::Config("retrieval.k must be at least 1".to_string()));
        }
        if !(self.linkpred.tau.is_finite() && (0.0..=1.0).contains(&self.linkpred.tau)) {
            return Err(EngineError::Config(format!(
                "linkpred.tau {} must lie in [0, 1]",
                self.linkpred.tau
            )));
        }
        let mut required: Vec<(&str, &Path)> = vec![
            ("paths.ontology", &self.paths.ontology),
            ("paths.templates", &self.paths.templates),
            ("paths.aliases", &self.paths.aliases),
            ("paths.rules", &self.paths.rules),
        ];
        if let Some(store) = &self.paths.store {
            required.push(("paths.store", store));
        }
        match (self.backend, &self.mock, &self.http) {
            (BackendChoice::Mock, Some(mock), _) => {
                required.push(("mock.rules_path", &mock.rules_path));
            }
            (BackendChoice::Mock, None, _) => {
                return Err(EngineError::Config(
                    "backend = \"mock\" requires a [mock] section with rules_path".to_string(),
                ));
            }
            (BackendChoice::Http, _, Some(_)) => {}
            (BackendChoice::Http, _, None) => {
                return Err(EngineError::Config(
                    "backend = \"http\" requires an [http] section with url".to_string(),
                ));
            }
        }
        for (key, path) in required {
            if !path.exists() {
                return Err(EngineError::Config(format!(
                    "{key} does not exist: {}",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}

/// One answered query with every artifact needed to trace it: the ranked
/// evidence, the exact prompt, the validated answer, and the tags the
/// answer actually cited.
#[derive(Debug, Clone)]
pub struct QueryBundle {
    pub answer: Answer,
    pub evidence: Vec<RankedEvidence>,
    pub prompt: Prompt,
    /// Tags cited in the answer text, in order of first appearance. Always
    /// a subset of the prompt's citation map.
    pub cited: Vec<String>,
    /// KG revision the whole bundle was computed against.
    pub revision: u64,
}

/// Wire form of one citation map entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationEntry {
    pub tag: String,
    pub triple_id: String,
    pub subject: String,
    pub relation: String,
    pub object: Node,
    pub doc_uri: String,
    pub paragraph: u32,
    pub predicted: bool,
}

/// Wire form of one evidence line's score decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceScore {
    pub tag: String,
    pub triple_id: String,
    pub rank: usize,
    pub total: f64,
    pub sim: f64,
    pub ont_match: u8,
    pub ctx: f64,
}

/// Wire response for one query. The citation list mirrors the prompt's
/// citation map exactly, in evidence order; `revision` names the snapshot
/// the answer was computed against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub answer: String,
    pub citations: Vec<CitationEntry>,
    pub evidence: Vec<EvidenceScore>,
    pub revision: u64,
}

/// Everything needed to answer queries against one KG revision.
#[derive(Clone)]
pub struct Engine {
    kg: KnowledgeGraph,
    index: TripleIndex,
    templates: Arc<TemplateSet>,
    aliases: AliasTable,
    rules: RuleSet,
    backend: Arc<dyn GenerationBackend>,
    weights: Weights,
    k: usize,
    tau: f64,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("revision", &self.kg.revision())
            .field("live_triples", &self.kg.live_triples().count())
            .field("k", &self.k)
            .field("tau", &self.tau)
            .finish()
    }
}

impl Engine {
    /// Assemble an engine around an existing graph. The index is built
    /// fresh from the graph's live triples.
    pub fn new(
        kg: KnowledgeGraph,
        templates: TemplateSet,
        aliases: AliasTable,
        rules: RuleSet,
        backend: Arc<dyn GenerationBackend>,
        weights: Weights,
        k: usize,
    ) -> Result<Self, EngineError> {
        if k == 0 {
            return Err(EngineError::Config("k must be at least 1".to_string()));
        }
        weights.validate()?;
        let templates = Arc::new(templates);
        let surfaces = Arc::new(aliases.surface_forms());
        let index =
            TripleIndex::build(&kg, DualEncoder::bundled(), Arc::clone(&templates), surfaces)?;
        Ok(Engine {
            kg,
            index,
            templates,
            aliases,
            rules,
            backend,
            weights,
            k,
            tau: DEFAULT_TAU,
        })
    }

    /// Load every component named by a validated config.
    pub fn from_config(config: &EngineConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let ontology = Arc::new(
            Ontology::load(&config.paths.ontology)
                .map_err(|e| EngineError::Config(e.to_string()))?,
        );
        let templates = TemplateSet::load(&config.paths.templates)?;
        let aliases = AliasTable::load(&config.paths.aliases)?;
        let rules = RuleSet::load(&config.paths.rules, &ontology)?;
        let kg = match &config.paths.store {
            Some(path) => KnowledgeGraph::load_file(Arc::clone(&ontology), path)?.0,
            None => KnowledgeGraph::new(Arc::clone(&ontology)),
        };
        let backend: Arc<dyn GenerationBackend> = match config.backend {
            BackendChoice::Mock => {
                let mock = config.mock.as_ref().expect("validated above");
                Arc::new(
                    MockBackend::load(&mock.rules_path)
                        .map_err(|e| EngineError::Config(e.to_string()))?,
                )
            }
            BackendChoice::Http => {
                let http = config.http.as_ref().expect("validated above");
                Arc::new(
                    HttpBackend::new(http.url.clone())
                        .map_err(|e| EngineError::Config(e.to_string()))?,
                )
            }
        };
        let mut engine = Engine::new(
            kg,
            templates,
            aliases,
            rules,
            backend,
            config.retrieval.weights(),
            config.retrieval.k,
        )?;
        engine.tau = config.linkpred.tau;
        Ok(engine)
    }

    pub fn kg(&self) -> &KnowledgeGraph {
        &self.kg
    }

    pub fn index(&self) -> &TripleIndex {
        &self.index
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn aliases(&self) -> &AliasTable {
        &self.aliases
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn backend(&self) -> &Arc<dyn GenerationBackend> {
        &self.backend
    }

    pub fn weights(&self) -> Weights {
        self.weights
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn revision(&self) -> u64 {
        self.kg.revision()
    }

    /// Swap the ranking parameters without rebuilding the index.
    pub fn set_ranking(&mut self, weights: Weights, k: usize) -> Result<(), EngineError> {
        if k == 0 {
            return Err(EngineError::Config("k must be at least 1".to_string()));
        }
        weights.validate()?;
        self.weights = weights;
        self.k = k;
        Ok(())
    }

    /// Run a mutation against the graph, then bring the index back in sync.
    /// All writes must come through here; handing out `&mut KnowledgeGraph`
    /// directly would let the index drift.
    pub fn mutate<T>(
        &mut self,
        f: impl FnOnce(&mut KnowledgeGraph) -> T,
    ) -> Result<T, EngineError> {
        let out = f(&mut self.kg);
        self.index.reindex(&self.kg)?;
        Ok(out)
    }

    /// Answer one query: retrieve, verbalize, generate, validate citations.
    /// An answer citing a tag outside the prompt is quarantined as a
    /// citation-integrity error rather than returned.
    pub fn answer_query(
        &self,
        text: &str,
        ctx: &QueryContext,
    ) -> Result<QueryBundle, EngineError> {
        let evidence = retrieve(
            &self.index,
            text,
            ctx,
            self.k,
            self.weights,
            RetrieveOptions::default(),
        )?;
        let mut triples = Vec::with_capacity(evidence.len());
        for ev in &evidence {
            let triple = self.kg.get(ev.triple_id).ok_or_else(|| {
                EngineError::Retrieval(RetrievalError::IndexDrift(format!(
                    "indexed triple {} is gone from the graph",
                    ev.triple_id
                )))
            })?;
            triples.push(triple);
        }
        let prompt = build_prompt(&triples, text, &self.templates)?;
        let answer = self
            .backend
            .generate(&prompt)
            .map_err(EngineError::Generation)?;
        let cited = validate_citations(&answer.text, &prompt)
            .map_err(|e| EngineError::CitationIntegrity(e.to_string()))?;
        Ok(QueryBundle {
            answer,
            evidence,
            prompt,
            cited,
            revision: self.kg.revision(),
        })
    }

    /// Answer a query and shape the wire response.
    pub fn respond(&self, text: &str, ctx: &QueryContext) -> Result<QueryResponse, EngineError> {
        let bundle = self.answer_query(text, ctx)?;
        self.wire_response(&bundle)
    }

    /// Project a bundle onto the wire type. Citations come out in evidence
    /// order and cover the prompt's citation map exactly.
    pub fn wire_response(&self, bundle: &QueryBundle) -> Result<QueryResponse, EngineError> {
        let mut citations = Vec::with_capacity(bundle.prompt.evidence_lines.len());
        let mut evidence = Vec::with_capacity(bundle.evidence.len());
        for (i, (tag, _)) in bundle.prompt.evidence_lines.iter().enumerate() {
            let citation = bundle.prompt.resolve(tag).ok_or_else(|| {
                EngineError::CitationIntegrity(format!("prompt lost its own tag {tag}"))
            })?;
            let triple = self.kg.get(citation.triple_id).ok_or_else(|| {
                EngineError::Retrieval(RetrievalError::IndexDrift(format!(
                    "cited triple {} is gone from the graph",
                    citation.triple_id
                )))
            })?;
            citations.push(CitationEntry {
                tag: tag.clone(),
                triple_id: citation.triple_id.to_hex(),
                subject: triple.subject.clone(),
                relation: triple.relation.clone(),
                object: triple.object.clone(),
                doc_uri: citation.provenance.doc_uri.clone(),
                paragraph: citation.provenance.paragraph,
                predicted: triple.predicted,
            });
            let ev = &bundle.evidence[i];
            evidence.push(EvidenceScore {
                tag: tag.clone(),
                triple_id: ev.triple_id.to_hex(),
                rank: ev.rank,
                total: ev.total,
                sim: ev.sim,
                ont_match: ev.ont_match,
                ctx: ev.ctx,
            });
        }
        Ok(QueryResponse {
            answer: bundle.answer.text.clone(),
            citations,
            evidence,
            revision: bundle.revision,
        })
    }
}
