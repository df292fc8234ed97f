//! Dual-encoder retrieval over live triples with ontology-aware ranking.
//!
//! Queries and verbalized triples are embedded into one vector space by a
//! deterministic feature-hash encoder (char 3-grams plus word unigrams,
//! signed hashing, L2-normalized). Candidates are ranked by a weighted sum
//! of cosine similarity, semantic-class match against the classified query,
//! and overlap with recently mentioned entities. Ranking is exact: the
//! top-k always equals a brute-force scoring of every indexed triple.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::SemanticClass;
use crate::store::{KnowledgeGraph, Triple, TripleId};
use crate::text::fold;
use crate::verbalize::{TemplateSet, VerbalizeError};

/// Hash seed for the bundled encoder. Changing it changes every vector, so
/// it is part of the index format.
pub const DEFAULT_HASH_SEED: u64 = 0x9E37_79B9_7F4A_7C15;

/// Embedding dimension of the bundled encoder.
pub const DEFAULT_ENCODER_DIM: usize = 256;

/// Bound on remembered conversation entities.
pub const DEFAULT_CONTEXT_CAP: usize = 32;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("encoder dimension must be positive")]
    ZeroDim,
    #[error("query text is empty")]
    EmptyQuery,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("bad weights: {0}")]
    BadWeights(String),
    #[error("index built at dim {index} but encoder yields dim {encoder}")]
    DimMismatch { index: usize, encoder: usize },
    #[error("snapshot revision {snapshot} is behind index revision {index}")]
    RevisionRegression { index: u64, snapshot: u64 },
    #[error("index and snapshot disagree: {0}")]
    IndexDrift(String),
    #[error(transparent)]
    Verbalize(#[from] VerbalizeError),
}

/// Text-to-vector contract. Implementations must be deterministic and emit
/// finite vectors of a fixed dimension.
pub trait Encoder: Send + Sync {
    fn dim(&self) -> usize;
    fn encode(&self, text: &str) -> Vec<f32>;
}

/// Query-side and triple-side encoders sharing one vector space.
#[derive(Clone)]
pub struct DualEncoder {
    query: Arc<dyn Encoder>,
    triple: Arc<dyn Encoder>,
}

impl std::fmt::Debug for DualEncoder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DualEncoder").field("dim", &self.dim()).finish()
    }
}

impl DualEncoder {
    pub fn new(
        query: Arc<dyn Encoder>,
        triple: Arc<dyn Encoder>,
    ) -> Result<Self, RetrievalError> {
        if query.dim() == 0 || triple.dim() == 0 {
            return Err(RetrievalError::ZeroDim);
        }
        if query.dim() != triple.dim() {
            return Err(RetrievalError::DimMismatch {
                index: query.dim(),
                encoder: triple.dim(),
            });
        }
        Ok(DualEncoder { query, triple })
    }

    /// Bundled deterministic encoder on both sides.
    pub fn bundled() -> Self {
        let enc: Arc<dyn Encoder> =
            Arc::new(HashEncoder::new(DEFAULT_ENCODER_DIM, DEFAULT_HASH_SEED).expect("dim > 0"));
        DualEncoder { query: enc.clone(), triple: enc }
    }

    pub fn dim(&self) -> usize {
        self.query.dim()
    }

    pub fn encode_query(&self, text: &str) -> Vec<f32> {
        self.query.encode(text)
    }

    pub fn encode_triple_text(&self, text: &str) -> Vec<f32> {
        self.triple.encode(text)
    }
}

/// Feature-hash text encoder: signed FNV-1a hashing of character 3-grams
/// and word unigrams into a fixed-dimension L2-normalized vector.
#[derive(Debug, Clone)]
pub struct HashEncoder {
    dim: usize,
    seed: u64,
}

impl HashEncoder {
    pub fn new(dim: usize, seed: u64) -> Result<Self, RetrievalError> {
        if dim == 0 {
            return Err(RetrievalError::ZeroDim);
        }
        Ok(HashEncoder { dim, seed })
    }
}

fn fnv1a64(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = seed ^ 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Encoder for HashEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Vec<f32> {
        let folded = fold(text);
        let mut v = vec![0f32; self.dim];
        let mut bump = |feature: &str| {
            let h = fnv1a64(self.seed, feature.as_bytes());
            let idx = ((h >> 1) % self.dim as u64) as usize;
            let sign = if h & 1 == 0 { 1.0 } else { -1.0 };
            v[idx] += sign;
        };
        for word in folded.split(' ').filter(|w| !w.is_empty()) {
            bump(&format!("w:{word}"));
        }
        let chars: Vec<char> = folded.chars().collect();
        for window in chars.windows(3) {
            let gram: String = window.iter().collect();
            bump(&format!("c:{gram}"));
        }
        let norm = v.iter().map(|x| (*x as f64) * (*x as f64)).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x = (*x as f64 / norm) as f32;
            }
        }
        v
    }
}

/// Keyword cues per semantic class, matched on word boundaries in the
/// folded query. The class with the most distinct cue hits wins; ties
/// resolve by listing order (most specific first); no hits at all falls
/// back to `operational`.
const CLASS_CUES: &[(SemanticClass, &[&str])] = &[
    (
        SemanticClass::LatencyThreshold,
        &["latency", "latencies", "delay", "deadline", "ms"],
    ),
    (
        SemanticClass::SlicingConstraint,
        &["slice type", "sst", "suitable", "suits", "provision", "urllc", "embb", "miot"],
    ),
    (
        SemanticClass::QosAttribute,
        &["qos", "5qi", "throughput", "bandwidth", "bitrate", "mbps", "quality of service"],
    ),
    (
        SemanticClass::Structural,
        &["connected", "topology", "identified", "documented", "linked", "identifier"],
    ),
    (
        SemanticClass::Operational,
        &["tilt", "cpu", "last change", "policy", "serves", "serving", "status", "changed"],
    ),
];

/// Lightweight keyword classifier mapping a query onto an ontology semantic
/// class, falling back to `operational` when nothing matches.
pub fn classify_query(query: &str) -> Result<SemanticClass, RetrievalError> {
    if query.trim().is_empty() {
        return Err(RetrievalError::EmptyQuery);
    }
    let padded = format!(" {} ", fold(query));
    let mut best = SemanticClass::Operational;
    let mut best_hits = 0usize;
    for (class, cues) in CLASS_CUES {
        let hits = cues.iter().filter(|cue| padded.contains(&format!(" {cue} "))).count();
        if hits > best_hits {
            best = *class;
            best_hits = hits;
        }
    }
    Ok(best)
}

/// Ranking weights over (cosine similarity, class match, context overlap).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub sim: f64,
    pub ont: f64,
    pub ctx: f64,
}

impl Weights {
    pub const DEFAULT: Weights = Weights { sim: 0.7, ont: 0.2, ctx: 0.1 };
    pub const UNIFORM: Weights =
        Weights { sim: 1.0 / 3.0, ont: 1.0 / 3.0, ctx: 1.0 - 2.0 / 3.0 };

    pub fn validate(&self) -> Result<(), RetrievalError> {
        for (name, w) in [("sim", self.sim), ("ont", self.ont), ("ctx", self.ctx)] {
            if !w.is_finite() || w < 0.0 {
                return Err(RetrievalError::BadWeights(format!(
                    "{name} weight {w} must be finite and non-negative"
                )));
            }
        }
        let sum = self.sim + self.ont + self.ctx;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(RetrievalError::BadWeights(format!("weights sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// Parse "0.7,0.2,0.1" as used on the command line.
    pub fn parse(text: &str) -> Result<Self, RetrievalError> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(RetrievalError::BadWeights(format!(
                "expected three comma-separated weights, got `{text}`"
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| {
                RetrievalError::BadWeights(format!("`{s}` is not a number"))
            })
        };
        let w = Weights { sim: parse(parts[0])?, ont: parse(parts[1])?, ctx: parse(parts[2])? };
        w.validate()?;
        Ok(w)
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights::DEFAULT
    }
}

/// Bounded most-recent-first memory of entities mentioned across turns.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct QueryContext {
    recent: VecDeque<String>,
    #[serde(default = "default_cap")]
    cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_CONTEXT_CAP
}

impl QueryContext {
    pub fn new(cap: usize) -> Self {
        QueryContext { recent: VecDeque::new(), cap: cap.max(1) }
    }

    pub fn empty() -> Self {
        Self::new(DEFAULT_CONTEXT_CAP)
    }

    /// Record a mention: moves the entity to the front, evicting from the
    /// back when over capacity.
    pub fn note_entity(&mut self, id: &str) {
        if self.cap == 0 {
            self.cap = DEFAULT_CONTEXT_CAP;
        }
        if let Some(pos) = self.recent.iter().position(|e| e == id) {
            self.recent.remove(pos);
        }
        self.recent.push_front(id.to_string());
        while self.recent.len() > self.cap {
            self.recent.pop_back();
        }
    }

    pub fn note_entities<'a>(&mut self, ids: impl IntoIterator<Item = &'a str>) {
        for id in ids {
            self.note_entity(id);
        }
    }

    pub fn contains(&self, id: &str) -> bool {
        self.recent.iter().any(|e| e == id)
    }

    /// Most-recent-first.
    pub fn recent(&self) -> impl Iterator<Item = &str> {
        self.recent.iter().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.recent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recent.is_empty()
    }
}

/// Everything scoring needs about one indexed triple.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub vector: Vec<f32>,
    pub semantic_class: SemanticClass,
    pub predicted: bool,
    pub entities: Vec<String>,
    /// KG revision current when this entry was (re)encoded.
    pub indexed_at_revision: u64,
}

/// Known surface forms per canonical entity id, folded. See [`index_text`].
pub type SurfaceForms = BTreeMap<String, Vec<String>>;

/// The text an index entry is encoded from: the triple's sentence plus any
/// known surface forms of its entities. Appending surfaces lets a query
/// that names an entity by a spoken form ("ultra-reliable low-latency
/// communications") overlap lexically with a triple that stores the
/// canonical id ("URLLC"). Prompt evidence keeps the bare sentence; the
/// enrichment exists only on the index side.
pub fn index_text(
    templates: &TemplateSet,
    surfaces: &SurfaceForms,
    t: &Triple,
) -> Result<String, RetrievalError> {
    let mut text = templates.verbalize(t)?;
    for entity in t.entities() {
        if let Some(forms) = surfaces.get(entity) {
            for form in forms {
                text.push(' ');
                text.push_str(form);
            }
        }
    }
    Ok(text)
}

/// Vector index over exactly the live triples of one KG revision.
#[derive(Clone)]
pub struct TripleIndex {
    encoders: DualEncoder,
    templates: Arc<TemplateSet>,
    surfaces: Arc<SurfaceForms>,
    entries: BTreeMap<TripleId, IndexEntry>,
    revision: u64,
    generation: u64,
    encode_count: u64,
}

impl std::fmt::Debug for TripleIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TripleIndex")
            .field("dim", &self.dim())
            .field("entries", &self.entries.len())
            .field("revision", &self.revision)
            .field("generation", &self.generation)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReindexStats {
    pub added: usize,
    pub removed: usize,
    pub encodes: usize,
}

impl TripleIndex {
    /// Encode every live triple of the snapshot from scratch.
    pub fn build(
        kg: &KnowledgeGraph,
        encoders: DualEncoder,
        templates: Arc<TemplateSet>,
        surfaces: Arc<SurfaceForms>,
    ) -> Result<Self, RetrievalError> {
        let mut index = TripleIndex {
            encoders,
            templates,
            surfaces,
            entries: BTreeMap::new(),
            revision: 0,
            generation: 0,
            encode_count: 0,
        };
        index.populate(kg)?;
        index.revision = kg.revision();
        Ok(index)
    }

    fn populate(&mut self, kg: &KnowledgeGraph) -> Result<(), RetrievalError> {
        for t in kg.live_triples() {
            let entry = self.encode_entry(kg, t)?;
            self.entries.insert(t.id, entry);
        }
        Ok(())
    }

    fn encode_entry(
        &mut self,
        kg: &KnowledgeGraph,
        t: &crate::store::Triple,
    ) -> Result<IndexEntry, RetrievalError> {
        let text = index_text(&self.templates, &self.surfaces, t)?;
        let vector = self.encoders.encode_triple_text(&text);
        if vector.len() != self.encoders.dim() {
            return Err(RetrievalError::DimMismatch {
                index: self.encoders.dim(),
                encoder: vector.len(),
            });
        }
        self.encode_count += 1;
        let semantic_class = kg
            .ontology()
            .classify_relation(&t.relation)
            .map_err(|e| RetrievalError::IndexDrift(e.to_string()))?;
        Ok(IndexEntry {
            vector,
            semantic_class,
            predicted: t.predicted,
            entities: t.entities().into_iter().map(str::to_string).collect(),
            indexed_at_revision: kg.revision(),
        })
    }

    /// Bring the index up to the snapshot: encode newly live triples, drop
    /// superseded ones, leave everything else untouched.
    pub fn reindex(&mut self, kg: &KnowledgeGraph) -> Result<ReindexStats, RetrievalError> {
        if kg.revision() < self.revision {
            return Err(RetrievalError::RevisionRegression {
                index: self.revision,
                snapshot: kg.revision(),
            });
        }
        let live: BTreeSet<TripleId> = kg.live_triples().map(|t| t.id).collect();
        let stale: Vec<TripleId> =
            self.entries.keys().filter(|id| !live.contains(id)).copied().collect();
        let removed = stale.len();
        for id in stale {
            self.entries.remove(&id);
        }
        let encode_before = self.encode_count;
        let mut added = 0;
        for t in kg.live_triples() {
            if self.entries.contains_key(&t.id) {
                continue;
            }
            let entry = self.encode_entry(kg, t)?;
            self.entries.insert(t.id, entry);
            added += 1;
        }
        self.revision = kg.revision();
        self.generation += 1;
        Ok(ReindexStats {
            added,
            removed,
            encodes: (self.encode_count - encode_before) as usize,
        })
    }

    pub fn dim(&self) -> usize {
        self.encoders.dim()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Cumulative triple encodes performed over the index lifetime; the
    /// cost benchmark compares this between incremental and rebuild paths.
    pub fn encode_count(&self) -> u64 {
        self.encode_count
    }

    pub fn entry(&self, id: TripleId) -> Option<&IndexEntry> {
        self.entries.get(&id)
    }

    /// The surface-form enrichment this index encodes with.
    pub fn surfaces(&self) -> Arc<SurfaceForms> {
        Arc::clone(&self.surfaces)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&TripleId, &IndexEntry)> {
        self.entries.iter()
    }

    /// Same indexed content (ids, vectors, classes, flags), ignoring when
    /// each entry was encoded. Incremental and rebuilt indexes over the
    /// same KG state must compare equal here.
    pub fn same_entries(&self, other: &TripleIndex) -> bool {
        self.entries.len() == other.entries.len()
            && self.entries.iter().all(|(id, e)| {
                other.entries.get(id).is_some_and(|o| {
                    e.vector == o.vector
                        && e.semantic_class == o.semantic_class
                        && e.predicted == o.predicted
                        && e.entities == o.entities
                })
            })
    }

    pub fn encoders(&self) -> &DualEncoder {
        &self.encoders
    }

    pub fn templates(&self) -> &Arc<TemplateSet> {
        &self.templates
    }
}

/// One ranked retrieval hit with its full score decomposition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEvidence {
    pub triple_id: TripleId,
    pub rank: usize,
    pub total: f64,
    pub sim: f64,
    pub ont_match: u8,
    pub ctx: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RetrieveOptions {
    /// Drop candidates whose semantic class differs from the query's before
    /// ranking, instead of only down-weighting them.
    pub hard_filter: bool,
    /// Rank every extracted triple above every predicted one, regardless of
    /// score. Off by default: extracted-first applies only to exact ties.
    pub extracted_first: bool,
}

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0f64;
    let mut na = 0f64;
    let mut nb = 0f64;
    for (x, y) in a.iter().zip(b) {
        dot += *x as f64 * *y as f64;
        na += *x as f64 * *x as f64;
        nb += *y as f64 * *y as f64;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

fn ctx_overlap(entities: &[String], ctx: &QueryContext) -> f64 {
    if entities.is_empty() {
        return 0.0;
    }
    let hits = entities.iter().filter(|e| ctx.contains(e)).count();
    hits as f64 / entities.len() as f64
}

/// Candidate ordering: higher total first, extracted before predicted on
/// ties, then ascending triple id.
fn better(
    a: &(TripleId, bool, f64, f64, u8, f64),
    b: &(TripleId, bool, f64, f64, u8, f64),
    extracted_first: bool,
) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    let (a_id, a_pred, a_total, ..) = (a.0, a.1, a.2);
    let (b_id, b_pred, b_total, ..) = (b.0, b.1, b.2);
    if extracted_first && a_pred != b_pred {
        return if a_pred { Ordering::Greater } else { Ordering::Less };
    }
    match b_total.total_cmp(&a_total) {
        Ordering::Equal => {}
        ord => return ord,
    }
    if a_pred != b_pred {
        return if a_pred { Ordering::Greater } else { Ordering::Less };
    }
    a_id.cmp(&b_id)
}

/// Exact top-k retrieval: score every indexed triple, return the k best.
pub fn retrieve(
    index: &TripleIndex,
    query: &str,
    ctx: &QueryContext,
    k: usize,
    weights: Weights,
    opts: RetrieveOptions,
) -> Result<Vec<RankedEvidence>, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::ZeroK);
    }
    weights.validate()?;
    let qclass = classify_query(query)?;
    let qvec = index.encoders.encode_query(query);
    if qvec.len() != index.dim() {
        return Err(RetrievalError::DimMismatch { index: index.dim(), encoder: qvec.len() });
    }

    let mut scored: Vec<(TripleId, bool, f64, f64, u8, f64)> =
        Vec::with_capacity(index.entries.len());
    for (id, entry) in &index.entries {
        let matches_class = entry.semantic_class == qclass;
        if opts.hard_filter && !matches_class {
            continue;
        }
        let sim = cosine(&qvec, &entry.vector);
        let ont: u8 = matches_class.into();
        let ctx_score = ctx_overlap(&entry.entities, ctx);
        let total = weights.sim * sim + weights.ont * ont as f64 + weights.ctx * ctx_score;
        scored.push((*id, entry.predicted, total, sim, ont, ctx_score));
    }

    // Partial selection: keep the k best seen so far in a bounded worst-out
    // buffer. Exactness is checked against the full-sort oracle in tests.
    let mut best: Vec<(TripleId, bool, f64, f64, u8, f64)> = Vec::with_capacity(k + 1);
    for cand in scored {
        let pos = best
            .binary_search_by(|probe| better(probe, &cand, opts.extracted_first))
            .unwrap_or_else(|p| p);
        if pos < k {
            best.insert(pos, cand);
            if best.len() > k {
                best.pop();
            }
        }
    }

    Ok(best
        .into_iter()
        .enumerate()
        .map(|(i, (triple_id, _, total, sim, ont_match, ctx_score))| RankedEvidence {
            triple_id,
            rank: i + 1,
            total,
            sim,
            ont_match,
            ctx: ctx_score,
        })
        .collect())
}
