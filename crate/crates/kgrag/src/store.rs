//! Append-mostly property-graph triple store with provenance and supersession.
//!
//! Every triple is identified by a content hash over (subject, relation,
//! object), so re-inserting the same fact is a no-op. Stale facts are never
//! deleted: a newer conflicting fact on a functional relation marks the old
//! one superseded and keeps it queryable for audit. Explicitly extracted
//! facts always win conflicts against model-predicted ones.
//!
//! Entity instances are typed lazily: the first schema-valid use of an id
//! adopts the entity type its signature implies. When several signatures
//! would fit, an id prefixed with a type name ("UPF-X", "Slice_27") resolves
//! the ambiguity; anything still ambiguous is rejected rather than guessed.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::ops::Deref;
use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ontology::{LiteralDomain, Ontology, TailType};

/// Stable 128-bit content hash of (subject, relation, object), hex-rendered.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TripleId([u8; 16]);

impl TripleId {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, StoreError> {
        let bytes = hex::decode(s).map_err(|_| StoreError::BadTripleId(s.to_string()))?;
        let arr: [u8; 16] =
            bytes.try_into().map_err(|_| StoreError::BadTripleId(s.to_string()))?;
        Ok(TripleId(arr))
    }
}

impl fmt::Display for TripleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for TripleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TripleId({})", self.to_hex())
    }
}

impl Serialize for TripleId {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for TripleId {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        TripleId::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Typed literal value; the variant fixes the literal domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Literal {
    Integer(i64),
    DurationMs(i64),
    RateMbps(f64),
    Text(String),
}

impl Literal {
    pub fn domain(&self) -> LiteralDomain {
        match self {
            Literal::Integer(_) => LiteralDomain::Integer,
            Literal::DurationMs(_) => LiteralDomain::DurationMs,
            Literal::RateMbps(_) => LiteralDomain::RateMbps,
            Literal::Text(_) => LiteralDomain::Text,
        }
    }

    /// Bare value rendering, without units. Templates add units.
    pub fn render_value(&self) -> String {
        match self {
            Literal::Integer(v) => v.to_string(),
            Literal::DurationMs(v) => v.to_string(),
            Literal::RateMbps(v) => format!("{v}"),
            Literal::Text(v) => v.clone(),
        }
    }
}

/// A graph node position: an entity id or a typed literal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Entity(String),
    Literal(Literal),
}

impl Node {
    pub fn entity(id: impl Into<String>) -> Self {
        Node::Entity(id.into())
    }

    pub fn as_entity(&self) -> Option<&str> {
        match self {
            Node::Entity(id) => Some(id),
            Node::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Node::Entity(_) => None,
            Node::Literal(l) => Some(l),
        }
    }

    /// Canonical key used for hashing and adjacency. Literal keys carry a
    /// unit-separator prefix no entity id can contain, so the namespaces
    /// cannot collide.
    pub fn key(&self) -> String {
        match self {
            Node::Entity(id) => id.clone(),
            Node::Literal(l) => format!("\u{1f}{}\u{1f}{}", l.domain().tag(), l.render_value()),
        }
    }
}

/// Provenance every triple must carry: where the fact came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub doc_uri: String,
    pub paragraph: u32,
    pub source_family: SourceFamily,
    pub revision_date: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceFamily {
    Spec,
    VendorDoc,
    Log,
    Telemetry,
    Synthetic,
}

impl fmt::Display for SourceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SourceFamily::Spec => "spec",
            SourceFamily::VendorDoc => "vendor_doc",
            SourceFamily::Log => "log",
            SourceFamily::Telemetry => "telemetry",
            SourceFamily::Synthetic => "synthetic",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub id: TripleId,
    pub subject: String,
    pub relation: String,
    pub object: Node,
    /// True for model-predicted edges, false for explicitly extracted facts.
    pub predicted: bool,
    /// Plausibility in (0, 1]; extracted facts carry exactly 1.0.
    pub score: f64,
    pub provenance: Provenance,
    /// When the fact became current (event time, not ingest time).
    pub valid_from: DateTime<Utc>,
    pub superseded_by: Option<TripleId>,
}

pub fn compute_id(subject: &str, relation: &str, object: &Node) -> TripleId {
    let canonical = format!("{subject}\u{1f}{relation}\u{1f}{}", object.key());
    let digest = Sha256::digest(canonical.as_bytes());
    let mut bytes = [0u8; 16];
    bytes.copy_from_slice(&digest[..16]);
    TripleId(bytes)
}

impl Triple {
    pub fn extracted(
        subject: impl Into<String>,
        relation: impl Into<String>,
        object: Node,
        provenance: Provenance,
        valid_from: DateTime<Utc>,
    ) -> Self {
        let subject = subject.into();
        let relation = relation.into();
        let id = compute_id(&subject, &relation, &object);
        Triple {
            id,
            subject,
            relation,
            object,
            predicted: false,
            score: 1.0,
            provenance,
            valid_from,
            superseded_by: None,
        }
    }

    pub fn predicted(
        subject: impl Into<String>,
        relation: impl Into<String>,
        object: Node,
        score: f64,
        provenance: Provenance,
        valid_from: DateTime<Utc>,
    ) -> Result<Self, StoreError> {
        if !(score > 0.0 && score <= 1.0) || !score.is_finite() {
            return Err(StoreError::BadScore(score));
        }
        let subject = subject.into();
        let relation = relation.into();
        let id = compute_id(&subject, &relation, &object);
        Ok(Triple {
            id,
            subject,
            relation,
            object,
            predicted: true,
            score,
            provenance,
            valid_from,
            superseded_by: None,
        })
    }

    pub fn is_live(&self) -> bool {
        self.superseded_by.is_none()
    }

    /// Entity ids this triple touches (subject plus entity-valued object).
    pub fn entities(&self) -> Vec<&str> {
        let mut out = vec![self.subject.as_str()];
        if let Some(id) = self.object.as_entity() {
            out.push(id);
        }
        out
    }
}

/// JSONL wire form. Field order is the serialization order, and
/// `superseded_by` only appears in store dumps, never in input triple files.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TripleRecord {
    subject: String,
    relation: String,
    object: Node,
    predicted: bool,
    score: f64,
    doc_uri: String,
    paragraph: u32,
    source_family: SourceFamily,
    revision_date: DateTime<Utc>,
    valid_from: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    superseded_by: Option<TripleId>,
}

impl From<&Triple> for TripleRecord {
    fn from(t: &Triple) -> Self {
        TripleRecord {
            subject: t.subject.clone(),
            relation: t.relation.clone(),
            object: t.object.clone(),
            predicted: t.predicted,
            score: t.score,
            doc_uri: t.provenance.doc_uri.clone(),
            paragraph: t.provenance.paragraph,
            source_family: t.provenance.source_family,
            revision_date: t.provenance.revision_date,
            valid_from: t.valid_from,
            superseded_by: t.superseded_by,
        }
    }
}

impl TripleRecord {
    fn into_triple(self) -> Result<Triple, StoreError> {
        if !self.score.is_finite() || !(self.score > 0.0 && self.score <= 1.0) {
            return Err(StoreError::BadScore(self.score));
        }
        if !self.predicted && self.score != 1.0 {
            return Err(StoreError::ExtractedScoreNotOne(self.score));
        }
        let id = compute_id(&self.subject, &self.relation, &self.object);
        Ok(Triple {
            id,
            subject: self.subject,
            relation: self.relation,
            object: self.object,
            predicted: self.predicted,
            score: self.score,
            provenance: Provenance {
                doc_uri: self.doc_uri,
                paragraph: self.paragraph,
                source_family: self.source_family,
                revision_date: self.revision_date,
            },
            valid_from: self.valid_from,
            superseded_by: self.superseded_by,
        })
    }
}

/// What `insert` did with a triple. Rejections are reported, not errored,
/// so batch loads can tally them.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum InsertOutcome {
    Inserted { id: TripleId },
    SupersededPrior { id: TripleId, superseded: TripleId },
    RejectedConflict { id: TripleId, conflicting: TripleId },
    RejectedSchema { reason: String },
    AlreadyPresent { id: TripleId },
}

impl InsertOutcome {
    pub fn is_inserted(&self) -> bool {
        matches!(self, InsertOutcome::Inserted { .. } | InsertOutcome::SupersededPrior { .. })
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("triple score {0} outside (0, 1]")]
    BadScore(f64),
    #[error("extracted triple must carry score 1.0, got {0}")]
    ExtractedScoreNotOne(f64),
    #[error("malformed triple id `{0}`")]
    BadTripleId(String),
    #[error("line {line}: malformed triple record: {message}")]
    ParseLine { line: usize, message: String },
    #[error("unknown triple id {0}")]
    UnknownId(TripleId),
    #[error("cannot supersede {prior} with {by}: {reason}")]
    BadSupersede { prior: TripleId, by: TripleId, reason: String },
    #[error("entity `{id}` already registered as {existing}, not {requested}")]
    EntityTypeConflict { id: String, existing: String, requested: String },
    #[error("unknown entity type `{0}`")]
    UnknownEntityType(String),
    #[error("dump restore: {0}")]
    BadDump(String),
    #[error("reading triple file: {0}")]
    Io(#[from] std::io::Error),
}

/// Immutable, thread-safe view of the store at a fixed revision.
#[derive(Debug, Clone)]
pub struct KgSnapshot(Arc<KnowledgeGraph>);

impl Deref for KgSnapshot {
    type Target = KnowledgeGraph;

    fn deref(&self) -> &KnowledgeGraph {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    ontology: Arc<Ontology>,
    ontology_version: u32,
    triples: BTreeMap<TripleId, Triple>,
    by_subject: BTreeMap<String, BTreeSet<TripleId>>,
    by_object: BTreeMap<String, BTreeSet<TripleId>>,
    /// Live triple per (subject, relation) for functional relations.
    functional_live: BTreeMap<(String, String), TripleId>,
    /// Entity id -> entity type, grown by adoption or registration.
    entities: BTreeMap<String, String>,
    revision: u64,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples
            && self.entities == other.entities
            && self.revision == other.revision
            && self.ontology_version == other.ontology_version
    }
}

/// Resolved typing for one candidate insert.
struct ResolvedTypes {
    subject_type: String,
    subject_new: bool,
    object_type: Option<String>,
    object_new: bool,
}

impl KnowledgeGraph {
    pub fn new(ontology: Arc<Ontology>) -> Self {
        let ontology_version = ontology.version();
        KnowledgeGraph {
            ontology,
            ontology_version,
            triples: BTreeMap::new(),
            by_subject: BTreeMap::new(),
            by_object: BTreeMap::new(),
            functional_live: BTreeMap::new(),
            entities: BTreeMap::new(),
            revision: 0,
        }
    }

    pub fn ontology(&self) -> &Arc<Ontology> {
        &self.ontology
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn ontology_version(&self) -> u32 {
        self.ontology_version
    }

    pub fn len_live(&self) -> usize {
        self.triples.values().filter(|t| t.is_live()).count()
    }

    pub fn len_total(&self) -> usize {
        self.triples.len()
    }

    pub fn get(&self, id: TripleId) -> Option<&Triple> {
        self.triples.get(&id)
    }

    pub fn triples(&self) -> impl Iterator<Item = &Triple> {
        self.triples.values()
    }

    pub fn live_triples(&self) -> impl Iterator<Item = &Triple> {
        self.triples.values().filter(|t| t.is_live())
    }

    pub fn entity_type_of(&self, id: &str) -> Option<&str> {
        self.entities.get(id).map(|s| s.as_str())
    }

    pub fn entities(&self) -> &BTreeMap<String, String> {
        &self.entities
    }

    /// Declare an entity's type up front (streaming updates use this for
    /// auto-created targets). Conflicting re-registration is an error.
    pub fn register_entity(&mut self, id: &str, entity_type: &str) -> Result<(), StoreError> {
        if self.ontology.entity_type(entity_type).is_none() {
            return Err(StoreError::UnknownEntityType(entity_type.to_string()));
        }
        match self.entities.get(id) {
            Some(existing) if existing != entity_type => Err(StoreError::EntityTypeConflict {
                id: id.to_string(),
                existing: existing.clone(),
                requested: entity_type.to_string(),
            }),
            Some(_) => Ok(()),
            None => {
                self.entities.insert(id.to_string(), entity_type.to_string());
                Ok(())
            }
        }
    }

    /// Insert one triple, arbitrating conflicts on functional relations.
    ///
    /// Precedence when a live triple with the same (subject, relation) but a
    /// different object exists:
    /// - extracted vs extracted: strictly later `valid_from` supersedes,
    ///   otherwise the incoming fact is rejected as stale;
    /// - extracted over predicted: always supersedes;
    /// - predicted vs extracted: always rejected;
    /// - predicted vs predicted: strictly higher score supersedes.
    ///
    /// A recurring (subject, relation, object) whose id exists superseded is
    /// re-activated in place when precedence favors it, keeping ids stable.
    pub fn insert(&mut self, triple: Triple) -> Result<InsertOutcome, StoreError> {
        if !triple.score.is_finite() || !(triple.score > 0.0 && triple.score <= 1.0) {
            return Err(StoreError::BadScore(triple.score));
        }
        if !triple.predicted && triple.score != 1.0 {
            return Err(StoreError::ExtractedScoreNotOne(triple.score));
        }

        let resolved = match self.resolve_types(&triple) {
            Ok(r) => r,
            Err(reason) => return Ok(InsertOutcome::RejectedSchema { reason }),
        };

        let functional = self
            .ontology
            .relation(&triple.relation)
            .map(|r| r.functional)
            .unwrap_or(false);
        let fkey = (triple.subject.clone(), triple.relation.clone());
        let live_conflict = if functional {
            self.functional_live
                .get(&fkey)
                .copied()
                .filter(|lid| self.triples[lid].object != triple.object)
        } else {
            None
        };

        if let Some(existing) = self.triples.get(&triple.id) {
            if existing.is_live() {
                return Ok(InsertOutcome::AlreadyPresent { id: triple.id });
            }
            // Superseded id recurring: re-activate only if it beats the
            // current live holder of this (subject, relation).
            let Some(live_id) = live_conflict else {
                return Ok(InsertOutcome::AlreadyPresent { id: triple.id });
            };
            let live = &self.triples[&live_id];
            if !incoming_wins(&triple, live) {
                return Ok(InsertOutcome::RejectedConflict {
                    id: triple.id,
                    conflicting: live_id,
                });
            }
            let id = triple.id;
            self.commit_adoption(&triple, &resolved);
            {
                let slot = self.triples.get_mut(&id).expect("checked above");
                slot.predicted = triple.predicted;
                slot.score = triple.score;
                slot.provenance = triple.provenance;
                slot.valid_from = triple.valid_from;
                slot.superseded_by = None;
            }
            self.triples.get_mut(&live_id).expect("live id exists").superseded_by = Some(id);
            self.functional_live.insert(fkey, id);
            self.revision += 1;
            return Ok(InsertOutcome::SupersededPrior { id, superseded: live_id });
        }

        if let Some(live_id) = live_conflict {
            let live = &self.triples[&live_id];
            if !incoming_wins(&triple, live) {
                return Ok(InsertOutcome::RejectedConflict {
                    id: triple.id,
                    conflicting: live_id,
                });
            }
            let id = triple.id;
            self.commit_adoption(&triple, &resolved);
            self.triples.get_mut(&live_id).expect("live id exists").superseded_by = Some(id);
            self.index_triple(&triple);
            self.triples.insert(id, triple);
            self.functional_live.insert(fkey, id);
            self.revision += 1;
            return Ok(InsertOutcome::SupersededPrior { id, superseded: live_id });
        }

        let id = triple.id;
        self.commit_adoption(&triple, &resolved);
        self.index_triple(&triple);
        if functional {
            self.functional_live.insert(fkey, id);
        }
        self.triples.insert(id, triple);
        self.revision += 1;
        Ok(InsertOutcome::Inserted { id })
    }

    /// Insert a batch in order, returning one outcome per triple.
    pub fn insert_batch(
        &mut self,
        triples: Vec<Triple>,
    ) -> Result<Vec<InsertOutcome>, StoreError> {
        triples.into_iter().map(|t| self.insert(t)).collect()
    }

    /// Explicitly mark `prior` superseded by `by`. Both must exist, share
    /// (subject, relation), and `by` must be live with later `valid_from`.
    pub fn supersede(&mut self, prior: TripleId, by: TripleId) -> Result<(), StoreError> {
        let by_triple =
            self.triples.get(&by).ok_or(StoreError::UnknownId(by))?.clone();
        let prior_triple =
            self.triples.get(&prior).ok_or(StoreError::UnknownId(prior))?.clone();
        let fail = |reason: &str| StoreError::BadSupersede {
            prior,
            by,
            reason: reason.to_string(),
        };
        if prior == by {
            return Err(fail("a triple cannot supersede itself"));
        }
        if !by_triple.is_live() {
            return Err(fail("superseding triple is itself superseded"));
        }
        if !prior_triple.is_live() {
            return Err(fail("prior triple is already superseded"));
        }
        if prior_triple.subject != by_triple.subject
            || prior_triple.relation != by_triple.relation
        {
            return Err(fail("triples do not share subject and relation"));
        }
        if by_triple.valid_from <= prior_triple.valid_from {
            return Err(fail("superseding triple must have strictly later valid_from"));
        }
        self.triples.get_mut(&prior).expect("prior exists").superseded_by = Some(by);
        let fkey = (by_triple.subject.clone(), by_triple.relation.clone());
        if self.functional_live.get(&fkey) == Some(&prior) {
            self.functional_live.insert(fkey, by);
        }
        self.revision += 1;
        Ok(())
    }

    /// Live triples matching the bound fields, ordered by id.
    pub fn lookup(
        &self,
        subject: Option<&str>,
        relation: Option<&str>,
        object: Option<&Node>,
    ) -> Vec<&Triple> {
        self.live_triples()
            .filter(|t| subject.map_or(true, |s| t.subject == s))
            .filter(|t| relation.map_or(true, |r| t.relation == r))
            .filter(|t| object.map_or(true, |o| &t.object == o))
            .collect()
    }

    pub fn has_live(&self, subject: &str, relation: &str, object: &Node) -> bool {
        let id = compute_id(subject, relation, object);
        self.triples.get(&id).map(|t| t.is_live()).unwrap_or(false)
    }

    /// Live triples matching (subject, relation, object) in the superseded
    /// state; used by the audit layer to spot outdated claims.
    pub fn find_superseded(
        &self,
        subject: &str,
        relation: &str,
        object: &Node,
    ) -> Option<&Triple> {
        let id = compute_id(subject, relation, object);
        self.triples.get(&id).filter(|t| !t.is_live())
    }

    /// Live triple currently holding a functional (subject, relation) slot.
    pub fn functional_value(&self, subject: &str, relation: &str) -> Option<&Triple> {
        self.functional_live
            .get(&(subject.to_string(), relation.to_string()))
            .map(|id| &self.triples[id])
    }

    /// Live triples within `hops` undirected hops of a seed node, ordered by
    /// id. Unknown seeds yield an empty result.
    pub fn neighborhood(&self, seed: &str, hops: usize) -> Vec<&Triple> {
        let mut seen_nodes = BTreeSet::new();
        let mut collected = BTreeSet::new();
        let mut frontier = VecDeque::new();
        seen_nodes.insert(seed.to_string());
        frontier.push_back(seed.to_string());
        for _ in 0..hops {
            let mut next = VecDeque::new();
            for node in frontier.drain(..) {
                let mut incident: BTreeSet<TripleId> = BTreeSet::new();
                if let Some(ids) = self.by_subject.get(&node) {
                    incident.extend(ids.iter().copied());
                }
                if let Some(ids) = self.by_object.get(&node) {
                    incident.extend(ids.iter().copied());
                }
                for id in incident {
                    let t = &self.triples[&id];
                    if !t.is_live() {
                        continue;
                    }
                    collected.insert(id);
                    for endpoint in [t.subject.clone(), t.object.key()] {
                        if seen_nodes.insert(endpoint.clone()) {
                            next.push_back(endpoint);
                        }
                    }
                }
            }
            frontier = next;
            if frontier.is_empty() {
                break;
            }
        }
        collected.iter().map(|id| &self.triples[id]).collect()
    }

    pub fn snapshot(&self) -> KgSnapshot {
        KgSnapshot(Arc::new(self.clone()))
    }

    /// Serialize every triple (live and superseded) as JSONL, ordered by id.
    /// Deterministic: equal stores dump byte-identically.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for t in self.triples.values() {
            let record = TripleRecord::from(t);
            out.push_str(&serde_json::to_string(&record).expect("triple serializes"));
            out.push('\n');
        }
        out
    }

    pub fn dump_to_file(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        std::fs::write(path, self.dump())?;
        Ok(())
    }

    /// Build a store from JSONL. Lines carrying `superseded_by` mark a store
    /// dump, which is restored verbatim; plain triple files go through the
    /// normal insert path line by line.
    pub fn load(ontology: Arc<Ontology>, text: &str) -> Result<(Self, Vec<InsertOutcome>), StoreError> {
        let records = parse_records(text)?;
        let is_dump = records.iter().any(|(_, r)| r.superseded_by.is_some());
        let mut kg = KnowledgeGraph::new(ontology);
        if is_dump {
            kg.restore(records)?;
            let outcomes = Vec::new();
            return Ok((kg, outcomes));
        }
        let mut outcomes = Vec::with_capacity(records.len());
        for (line, record) in records {
            let triple = record
                .into_triple()
                .map_err(|e| StoreError::ParseLine { line, message: e.to_string() })?;
            outcomes.push(kg.insert(triple)?);
        }
        Ok((kg, outcomes))
    }

    pub fn load_file(
        ontology: Arc<Ontology>,
        path: impl AsRef<Path>,
    ) -> Result<(Self, Vec<InsertOutcome>), StoreError> {
        let text = std::fs::read_to_string(path)?;
        Self::load(ontology, &text)
    }

    /// Restore a dump verbatim. Entity types are re-derived to a fixpoint so
    /// restoration does not depend on line order.
    fn restore(&mut self, records: Vec<(usize, TripleRecord)>) -> Result<(), StoreError> {
        let mut triples = Vec::with_capacity(records.len());
        for (line, record) in records {
            let triple = record
                .into_triple()
                .map_err(|e| StoreError::ParseLine { line, message: e.to_string() })?;
            triples.push(triple);
        }
        // Fixpoint type resolution over the whole set.
        let mut remaining: Vec<&Triple> = triples.iter().collect();
        loop {
            let before = remaining.len();
            let mut unresolved = Vec::new();
            for t in remaining {
                match self.resolve_types(t) {
                    Ok(resolved) => self.commit_adoption(t, &resolved),
                    Err(_) => unresolved.push(t),
                }
            }
            if unresolved.is_empty() {
                break;
            }
            if unresolved.len() == before {
                let mut reasons = Vec::new();
                for t in unresolved.iter().take(3) {
                    let reason = self.resolve_types(t).err().unwrap_or_default();
                    reasons.push(format!("({}, {}, {}): {reason}", t.subject, t.relation, t.object.key()));
                }
                return Err(StoreError::BadDump(format!(
                    "unresolvable entity types for {} triples, e.g. {}",
                    unresolved.len(),
                    reasons.join("; ")
                )));
            }
            remaining = unresolved;
        }
        for t in &triples {
            if self.triples.contains_key(&t.id) {
                return Err(StoreError::BadDump(format!("duplicate triple id {}", t.id)));
            }
            if let Some(by) = t.superseded_by {
                let target = triples.iter().find(|x| x.id == by).ok_or_else(|| {
                    StoreError::BadDump(format!("superseded_by {} refers to missing triple", by))
                })?;
                if target.subject != t.subject || target.relation != t.relation {
                    return Err(StoreError::BadDump(format!(
                        "superseded_by {} does not share subject and relation with {}",
                        by, t.id
                    )));
                }
            }
            self.index_triple(t);
            if t.is_live() {
                let functional = self
                    .ontology
                    .relation(&t.relation)
                    .map(|r| r.functional)
                    .unwrap_or(false);
                if functional {
                    let key = (t.subject.clone(), t.relation.clone());
                    if let Some(other) = self.functional_live.insert(key, t.id) {
                        return Err(StoreError::BadDump(format!(
                            "two live triples {} and {} share functional ({}, {})",
                            other, t.id, t.subject, t.relation
                        )));
                    }
                }
            }
            self.triples.insert(t.id, t.clone());
        }
        self.revision = self.triples.len() as u64;
        Ok(())
    }

    fn index_triple(&mut self, t: &Triple) {
        self.by_subject.entry(t.subject.clone()).or_default().insert(t.id);
        self.by_object.entry(t.object.key()).or_default().insert(t.id);
    }

    fn commit_adoption(&mut self, t: &Triple, resolved: &ResolvedTypes) {
        if resolved.subject_new {
            self.entities.insert(t.subject.clone(), resolved.subject_type.clone());
        }
        if resolved.object_new {
            if let (Some(obj_type), Some(obj_id)) = (&resolved.object_type, t.object.as_entity()) {
                self.entities.insert(obj_id.to_string(), obj_type.clone());
            }
        }
    }

    /// Find the unique signature-consistent typing for a triple's endpoints,
    /// honoring types already in the entity catalog.
    fn resolve_types(&self, t: &Triple) -> Result<ResolvedTypes, String> {
        let subject_known = self.entities.get(&t.subject).map(|s| s.as_str());
        let object_known = t
            .object
            .as_entity()
            .and_then(|id| self.entities.get(id))
            .map(|s| s.as_str());
        resolve_endpoint_types(
            &self.ontology,
            &t.subject,
            &t.relation,
            &t.object,
            subject_known,
            object_known,
        )
        .map(|(subject_type, object_type)| ResolvedTypes {
            subject_new: subject_known.is_none(),
            subject_type,
            object_new: t.object.as_entity().is_some() && object_known.is_none(),
            object_type,
        })
    }
}

/// Check whether a (subject, relation, object) can be typed consistently
/// with some ontology signature, with no prior knowledge of instance types.
/// Used by ingest to screen candidates before they reach a store.
pub fn schema_admissible(
    ontology: &Ontology,
    subject: &str,
    relation: &str,
    object: &Node,
) -> Result<(), String> {
    resolve_endpoint_types(ontology, subject, relation, object, None, None).map(|_| ())
}

/// Shared typing resolution: finds the signature-consistent (subject type,
/// object type) pair, or a human-readable reason why none exists.
fn resolve_endpoint_types(
    ontology: &Ontology,
    subject: &str,
    relation: &str,
    object: &Node,
    subject_known: Option<&str>,
    object_known: Option<&str>,
) -> Result<(String, Option<String>), String> {
    if ontology.relation(relation).is_none() {
        return Err(format!("unknown relation `{relation}`"));
    }

    let candidates: Vec<&crate::ontology::Signature> = ontology
        .signatures_for(relation)
        .filter(|sig| match subject_known {
            Some(st) => sig.head == st,
            None => true,
        })
        .filter(|sig| match (object, object_known) {
            (Node::Literal(l), _) => sig.tail == TailType::Literal(l.domain()),
            (Node::Entity(_), Some(ot)) => sig.tail == TailType::Entity(ot.to_string()),
            (Node::Entity(_), None) => matches!(sig.tail, TailType::Entity(_)),
        })
        .collect();

    if candidates.is_empty() {
        return Err(format!(
            "no signature permits ({}, {relation}, {})",
            subject_known.unwrap_or("?"),
            match (object, object_known) {
                (Node::Literal(l), _) => l.domain().tag().to_string(),
                (_, Some(ot)) => ot.to_string(),
                _ => "?".to_string(),
            }
        ));
    }

    let subject_type = match subject_known {
        Some(st) => st.to_string(),
        None => {
            let heads: BTreeSet<&str> = candidates.iter().map(|s| s.head.as_str()).collect();
            pick_type(subject, &heads).ok_or_else(|| {
                format!(
                    "ambiguous entity type for `{subject}` under relation `{relation}` (candidates: {})",
                    heads.iter().copied().collect::<Vec<_>>().join(", ")
                )
            })?
        }
    };

    let narrowed: Vec<_> = candidates.iter().filter(|s| s.head == subject_type).collect();
    if narrowed.is_empty() {
        return Err(format!("no signature permits ({subject_type}, {relation}, ...)"));
    }

    let object_type = match (object, object_known) {
        (Node::Literal(_), _) => None,
        (Node::Entity(_), Some(ot)) => Some(ot.to_string()),
        (Node::Entity(id), None) => {
            let tails: BTreeSet<&str> = narrowed
                .iter()
                .filter_map(|s| match &s.tail {
                    TailType::Entity(n) => Some(n.as_str()),
                    TailType::Literal(_) => None,
                })
                .collect();
            Some(pick_type(id, &tails).ok_or_else(|| {
                format!(
                    "ambiguous entity type for `{id}` under relation `{relation}` (candidates: {})",
                    tails.iter().copied().collect::<Vec<_>>().join(", ")
                )
            })?)
        }
    };

    Ok((subject_type, object_type))
}

/// Conflict arbitration between an incoming triple and the live holder of
/// the same functional (subject, relation). Extracted facts always beat
/// predicted ones; between equals, later valid_from (extracted) or higher
/// score (predicted) wins.
fn incoming_wins(incoming: &Triple, live: &Triple) -> bool {
    match (incoming.predicted, live.predicted) {
        (false, false) => incoming.valid_from > live.valid_from,
        (false, true) => true,
        (true, false) => false,
        (true, true) => incoming.score > live.score,
    }
}

/// Unique-or-prefix entity type choice: a single candidate wins outright;
/// otherwise an id spelled `Type` or `Type-x`/`Type_x` picks that candidate
/// (longest type name wins).
fn pick_type(id: &str, candidates: &BTreeSet<&str>) -> Option<String> {
    if candidates.len() == 1 {
        return candidates.iter().next().map(|s| s.to_string());
    }
    let mut best: Option<&str> = None;
    for c in candidates {
        let matches = id == *c
            || (id.starts_with(c)
                && matches!(id.as_bytes().get(c.len()), Some(b'-') | Some(b'_')));
        if matches && best.map_or(true, |b| c.len() > b.len()) {
            best = Some(c);
        }
    }
    best.map(|s| s.to_string())
}

fn parse_records(text: &str) -> Result<Vec<(usize, TripleRecord)>, StoreError> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: TripleRecord = serde_json::from_str(line)
            .map_err(|e| StoreError::ParseLine { line: i + 1, message: e.to_string() })?;
        records.push((i + 1, record));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> DateTime<Utc> {
        DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
    }

    fn prov(uri: &str, date: &str) -> Provenance {
        Provenance {
            doc_uri: uri.to_string(),
            paragraph: 0,
            source_family: SourceFamily::Spec,
            revision_date: ts(date),
        }
    }

    fn test_ontology() -> Arc<Ontology> {
        Arc::new(
            Ontology::from_json(
                r#"{
                "entity_types": [
                    {"name": "SST"}, {"name": "ServiceType"}, {"name": "SliceProfile"},
                    {"name": "Slice"}, {"name": "gNodeB"}, {"name": "UPF"}, {"name": "MEC"}
                ],
                "relation_types": [
                    {"name": "suitable_for", "functional": false, "semantic_class": "slicing_constraint"},
                    {"name": "max_latency", "functional": true, "semantic_class": "latency_threshold"},
                    {"name": "serves", "functional": false, "semantic_class": "operational"},
                    {"name": "tilt_deg", "functional": true, "semantic_class": "operational"},
                    {"name": "have", "functional": true, "semantic_class": "slicing_constraint"}
                ],
                "signatures": [
                    {"head": "SST", "relation": "suitable_for", "tail": "ServiceType"},
                    {"head": "SliceProfile", "relation": "max_latency", "tail": "duration_ms"},
                    {"head": "gNodeB", "relation": "serves", "tail": "Slice"},
                    {"head": "UPF", "relation": "serves", "tail": "Slice"},
                    {"head": "MEC", "relation": "serves", "tail": "Slice"},
                    {"head": "gNodeB", "relation": "tilt_deg", "tail": "integer"},
                    {"head": "SliceProfile", "relation": "have", "tail": "SST"}
                ]
            }"#,
            )
            .unwrap(),
        )
    }

    fn kg() -> KnowledgeGraph {
        KnowledgeGraph::new(test_ontology())
    }

    fn latency(profile: &str, ms: i64, date: &str) -> Triple {
        Triple::extracted(
            profile,
            "max_latency",
            Node::Literal(Literal::DurationMs(ms)),
            prov("doc://spec/profile", date),
            ts(date),
        )
    }

    #[test]
    fn id_depends_only_on_subject_relation_object() {
        let a = Triple::extracted(
            "SST_2",
            "suitable_for",
            Node::entity("URLLC"),
            prov("doc://a", "2025-06-01T00:00:00Z"),
            ts("2025-06-01T00:00:00Z"),
        );
        let b = Triple::predicted(
            "SST_2",
            "suitable_for",
            Node::entity("URLLC"),
            0.7,
            prov("doc://b", "2025-07-01T00:00:00Z"),
            ts("2025-07-01T00:00:00Z"),
        )
        .unwrap();
        assert_eq!(a.id, b.id);
        let c = Triple::extracted(
            "SST_2",
            "suitable_for",
            Node::entity("eMBB"),
            prov("doc://a", "2025-06-01T00:00:00Z"),
            ts("2025-06-01T00:00:00Z"),
        );
        assert_ne!(a.id, c.id);
    }

    #[test]
    fn fresh_store_has_revision_zero() {
        let g = kg();
        assert_eq!(g.revision(), 0);
        assert_eq!(g.len_total(), 0);
    }

    #[test]
    fn insert_then_reinsert_is_idempotent() {
        let mut g = kg();
        let t = Triple::extracted(
            "SST_2",
            "suitable_for",
            Node::entity("URLLC"),
            prov("doc://spec/sst", "2025-06-01T00:00:00Z"),
            ts("2025-06-01T00:00:00Z"),
        );
        let first = g.insert(t.clone()).unwrap();
        assert!(matches!(first, InsertOutcome::Inserted { .. }));
        let rev = g.revision();
        let second = g.insert(t).unwrap();
        assert!(matches!(second, InsertOutcome::AlreadyPresent { .. }));
        assert_eq!(g.revision(), rev, "no-op must not bump revision");
        assert_eq!(g.len_live(), 1);
    }

    #[test]
    fn later_extracted_fact_supersedes_on_functional_relation() {
        let mut g = kg();
        g.insert(latency("SliceProfile_A", 50, "2025-06-01T00:00:00Z")).unwrap();
        let out = g.insert(latency("SliceProfile_A", 80, "2025-07-01T00:00:00Z")).unwrap();
        let InsertOutcome::SupersededPrior { id, superseded } = out else {
            panic!("expected supersession, got {out:?}");
        };
        let old = g.get(superseded).unwrap();
        assert_eq!(old.superseded_by, Some(id));
        assert_eq!(g.len_live(), 1);
        assert_eq!(g.len_total(), 2);
        let live = g.functional_value("SliceProfile_A", "max_latency").unwrap();
        assert_eq!(live.object, Node::Literal(Literal::DurationMs(80)));
        // The superseded fact is gone from live lookups but still stored.
        assert!(g
            .lookup(Some("SliceProfile_A"), Some("max_latency"), None)
            .iter()
            .all(|t| t.id == id));
    }

    #[test]
    fn stale_extracted_fact_is_rejected() {
        let mut g = kg();
        g.insert(latency("SliceProfile_A", 50, "2025-07-01T00:00:00Z")).unwrap();
        let out = g.insert(latency("SliceProfile_A", 80, "2025-06-01T00:00:00Z")).unwrap();
        assert!(matches!(out, InsertOutcome::RejectedConflict { .. }));
        let live = g.functional_value("SliceProfile_A", "max_latency").unwrap();
        assert_eq!(live.object, Node::Literal(Literal::DurationMs(50)));
    }

    #[test]
    fn predicted_never_overrides_extracted() {
        let mut g = kg();
        g.insert(latency("SliceProfile_A", 50, "2025-06-01T00:00:00Z")).unwrap();
        let p = Triple::predicted(
            "SliceProfile_A",
            "max_latency",
            Node::Literal(Literal::DurationMs(80)),
            0.99,
            prov("model://kge", "2025-08-01T00:00:00Z"),
            ts("2025-08-01T00:00:00Z"),
        )
        .unwrap();
        let out = g.insert(p).unwrap();
        assert!(matches!(out, InsertOutcome::RejectedConflict { .. }));
    }

    #[test]
    fn extracted_supersedes_predicted_on_conflict() {
        let mut g = kg();
        let p = Triple::predicted(
            "SliceProfile_A",
            "max_latency",
            Node::Literal(Literal::DurationMs(80)),
            0.9,
            prov("model://kge", "2025-06-01T00:00:00Z"),
            ts("2025-06-01T00:00:00Z"),
        )
        .unwrap();
        g.insert(p).unwrap();
        let out = g.insert(latency("SliceProfile_A", 50, "2025-06-15T00:00:00Z")).unwrap();
        assert!(matches!(out, InsertOutcome::SupersededPrior { .. }));
        let live = g.functional_value("SliceProfile_A", "max_latency").unwrap();
        assert!(!live.predicted);
    }

    #[test]
    fn predicted_conflict_keeps_higher_score() {
        let mut g = kg();
        let mk = |ms: i64, score: f64, date: &str| {
            Triple::predicted(
                "SliceProfile_A",
                "max_latency",
                Node::Literal(Literal::DurationMs(ms)),
                score,
                prov("model://kge", date),
                ts(date),
            )
            .unwrap()
        };
        g.insert(mk(80, 0.6, "2025-06-01T00:00:00Z")).unwrap();
        let lose = g.insert(mk(90, 0.5, "2025-06-02T00:00:00Z")).unwrap();
        assert!(matches!(lose, InsertOutcome::RejectedConflict { .. }));
        let win = g.insert(mk(70, 0.8, "2025-06-03T00:00:00Z")).unwrap();
        assert!(matches!(win, InsertOutcome::SupersededPrior { .. }));
    }

    #[test]
    fn schema_violations_are_reported_with_reason() {
        let mut g = kg();
        // suitable_for never takes a duration literal.
        let bad = Triple::extracted(
            "SST_2",
            "suitable_for",
            Node::Literal(Literal::DurationMs(50)),
            prov("doc://x", "2025-06-01T00:00:00Z"),
            ts("2025-06-01T00:00:00Z"),
        );
        let out = g.insert(bad).unwrap();
        let InsertOutcome::RejectedSchema { reason } = out else {
            panic!("expected schema rejection, got {out:?}");
        };
        assert!(reason.contains("suitable_for"), "reason was: {reason}");
        assert_eq!(g.len_total(), 0);
    }

    #[test]
    fn unknown_relation_is_schema_rejected() {
        let mut g = kg();
        let bad = Triple::extracted(
            "SST_2",
            "bogus_rel",
            Node::entity("URLLC"),
            prov("doc://x", "2025-06-01T00:00:00Z"),
            ts("2025-06-01T00:00:00Z"),
        );
        let out = g.insert(bad).unwrap();
        assert!(matches!(out, InsertOutcome::RejectedSchema { .. }));
    }

    #[test]
    fn entity_types_adopt_from_unique_signature() {
        let mut g = kg();
        g.insert(Triple::extracted(
            "SST_2",
            "suitable_for",
            Node::entity("URLLC"),
            prov("doc://spec/sst", "2025-06-01T00:00:00Z"),
            ts("2025-06-01T00:00:00Z"),
        ))
        .unwrap();
        assert_eq!(g.entity_type_of("SST_2"), Some("SST"));
        assert_eq!(g.entity_type_of("URLLC"), Some("ServiceType"));
    }

    #[test]
    fn ambiguous_head_type_resolves_by_id_prefix() {
        let mut g = kg();
        // serves admits gNodeB, UPF, and MEC heads.
        let out = g
            .insert(Triple::extracted(
                "UPF-X",
                "serves",
                Node::entity("Slice_27"),
                prov("doc://noc", "2025-07-01T00:00:00Z"),
                ts("2025-07-01T00:00:00Z"),
            ))
            .unwrap();
        assert!(out.is_inserted());
        assert_eq!(g.entity_type_of("UPF-X"), Some("UPF"));
        assert_eq!(g.entity_type_of("Slice_27"), Some("Slice"));
    }

    #[test]
    fn unprefixed_ambiguous_entity_is_rejected_not_guessed() {
        let mut g = kg();
        let out = g
            .insert(Triple::extracted(
                "node77",
                "serves",
                Node::entity("Slice_27"),
                prov("doc://noc", "2025-07-01T00:00:00Z"),
                ts("2025-07-01T00:00:00Z"),
            ))
            .unwrap();
        let InsertOutcome::RejectedSchema { reason } = out else {
            panic!("expected schema rejection, got {out:?}");
        };
        assert!(reason.contains("node77"));
        assert!(g.entity_type_of("node77").is_none(), "failed insert must not adopt types");
    }

    #[test]
    fn rejected_insert_does_not_mutate_state() {
        let mut g = kg();
        g.insert(latency("SliceProfile_A", 50, "2025-07-01T00:00:00Z")).unwrap();
        let before_rev = g.revision();
        let before_dump = g.dump();
        g.insert(latency("SliceProfile_A", 80, "2025-06-01T00:00:00Z")).unwrap();
        assert_eq!(g.revision(), before_rev);
        assert_eq!(g.dump(), before_dump);
    }

    #[test]
    fn recurring_value_reactivates_superseded_id() {
        let mut g = kg();
        let tilt = |deg: i64, date: &str| {
            Triple::extracted(
                "gNodeB-42",
                "tilt_deg",
                Node::Literal(Literal::Integer(deg)),
                prov("stream://tilt", date),
                ts(date),
            )
        };
        g.insert(tilt(2, "2025-07-01T00:00:00Z")).unwrap();
        g.insert(tilt(4, "2025-07-02T00:00:00Z")).unwrap();
        let out = g.insert(tilt(2, "2025-07-03T00:00:00Z")).unwrap();
        assert!(matches!(out, InsertOutcome::SupersededPrior { .. }));
        let live = g.functional_value("gNodeB-42", "tilt_deg").unwrap();
        assert_eq!(live.object, Node::Literal(Literal::Integer(2)));
        assert_eq!(live.valid_from, ts("2025-07-03T00:00:00Z"));
        assert_eq!(g.len_total(), 2, "recurring value reuses its id");
        assert_eq!(g.len_live(), 1);
        // Replaying the stale middle value is rejected.
        let stale = g.insert(tilt(4, "2025-07-02T00:00:00Z")).unwrap();
        assert!(matches!(stale, InsertOutcome::RejectedConflict { .. }));
    }

    #[test]
    fn lookup_filters_by_bound_fields() {
        let mut g = kg();
        g.insert(Triple::extracted(
            "SST_2",
            "suitable_for",
            Node::entity("URLLC"),
            prov("doc://spec/sst", "2025-06-01T00:00:00Z"),
            ts("2025-06-01T00:00:00Z"),
        ))
        .unwrap();
        g.insert(Triple::extracted(
            "SST_1",
            "suitable_for",
            Node::entity("eMBB"),
            prov("doc://spec/sst", "2025-06-01T00:00:00Z"),
            ts("2025-06-01T00:00:00Z"),
        ))
        .unwrap();
        assert_eq!(g.lookup(Some("SST_2"), None, None).len(), 1);
        assert_eq!(g.lookup(None, Some("suitable_for"), None).len(), 2);
        assert_eq!(g.lookup(None, None, Some(&Node::entity("eMBB"))).len(), 1);
        assert_eq!(g.lookup(Some("SST_2"), Some("suitable_for"), Some(&Node::entity("eMBB"))).len(), 0);
    }

    #[test]
    fn neighborhood_walks_undirected_hops() {
        let mut g = kg();
        let d = "2025-07-01T00:00:00Z";
        for (s, o) in [("gNodeB-42", "Slice_27"), ("UPF-X", "Slice_27"), ("MEC-1", "Slice_27")] {
            g.insert(Triple::extracted(s, "serves", Node::entity(o), prov("doc://noc", d), ts(d)))
                .unwrap();
        }
        g.insert(Triple::extracted(
            "gNodeB-42",
            "tilt_deg",
            Node::Literal(Literal::Integer(4)),
            prov("doc://noc", d),
            ts(d),
        ))
        .unwrap();
        let one_hop = g.neighborhood("Slice_27", 1);
        assert_eq!(one_hop.len(), 3, "serves edges incident to the slice");
        let two_hop = g.neighborhood("Slice_27", 2);
        assert_eq!(two_hop.len(), 4, "tilt fact reached through gNodeB-42");
        assert!(g.neighborhood("nobody", 3).is_empty());
        assert!(g.neighborhood("Slice_27", 0).is_empty());
        // Results come back ordered by id.
        let ids: Vec<_> = two_hop.iter().map(|t| t.id).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn superseded_triples_never_appear_in_live_reads() {
        let mut g = kg();
        g.insert(latency("SliceProfile_A", 50, "2025-06-01T00:00:00Z")).unwrap();
        g.insert(latency("SliceProfile_A", 80, "2025-07-01T00:00:00Z")).unwrap();
        for t in g.lookup(None, None, None) {
            assert!(t.is_live());
        }
        for t in g.neighborhood("SliceProfile_A", 2) {
            assert!(t.is_live());
        }
    }

    #[test]
    fn snapshot_is_stable_under_later_mutation() {
        let mut g = kg();
        g.insert(latency("SliceProfile_A", 50, "2025-06-01T00:00:00Z")).unwrap();
        let snap = g.snapshot();
        let rev = snap.revision();
        g.insert(latency("SliceProfile_A", 80, "2025-07-01T00:00:00Z")).unwrap();
        assert_eq!(snap.revision(), rev);
        assert_eq!(snap.len_total(), 1);
        assert_eq!(g.len_total(), 2);
        let again = g.snapshot();
        assert_eq!(again.revision(), g.revision());
    }

    #[test]
    fn dump_round_trips_byte_identically() {
        let mut g = kg();
        g.insert(Triple::extracted(
            "SST_2",
            "suitable_for",
            Node::entity("URLLC"),
            prov("doc://spec/sst", "2025-06-01T00:00:00Z"),
            ts("2025-06-01T00:00:00Z"),
        ))
        .unwrap();
        g.insert(latency("SliceProfile_A", 50, "2025-06-01T00:00:00Z")).unwrap();
        g.insert(latency("SliceProfile_A", 80, "2025-07-01T00:00:00Z")).unwrap();
        let p = Triple::predicted(
            "SliceProfile_A",
            "have",
            Node::entity("SST_2"),
            0.875,
            prov("model://kge", "2025-07-02T00:00:00Z"),
            ts("2025-07-02T00:00:00Z"),
        )
        .unwrap();
        g.insert(p).unwrap();

        let dump1 = g.dump();
        let (restored, _) = KnowledgeGraph::load(test_ontology(), &dump1).unwrap();
        let dump2 = restored.dump();
        assert_eq!(dump1, dump2);
        assert_eq!(restored.len_live(), g.len_live());
        assert_eq!(restored.len_total(), g.len_total());
        assert_eq!(restored.entities(), g.entities());
        // And a third generation stays fixed.
        let (again, _) = KnowledgeGraph::load(test_ontology(), &dump2).unwrap();
        assert_eq!(again.dump(), dump2);
    }

    #[test]
    fn plain_triple_file_loads_through_insert_path() {
        let line = r#"{"subject":"SST_2","relation":"suitable_for","object":"URLLC","predicted":false,"score":1.0,"doc_uri":"doc://spec/sst","paragraph":0,"source_family":"spec","revision_date":"2025-06-01T00:00:00Z","valid_from":"2025-06-01T00:00:00Z"}"#;
        let (g, outcomes) = KnowledgeGraph::load(test_ontology(), line).unwrap();
        assert_eq!(outcomes.len(), 1);
        assert!(outcomes[0].is_inserted());
        assert_eq!(g.len_live(), 1);
        // Round-trip of the line itself is byte-stable.
        assert_eq!(g.dump().trim_end(), line);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "{\"subject\":\"SST_2\"}\n";
        let err = KnowledgeGraph::load(test_ontology(), text).unwrap_err();
        assert!(matches!(err, StoreError::ParseLine { line: 1, .. }));
    }

    #[test]
    fn malformed_timestamp_is_a_parse_error() {
        let line = r#"{"subject":"SST_2","relation":"suitable_for","object":"URLLC","predicted":false,"score":1.0,"doc_uri":"d","paragraph":0,"source_family":"spec","revision_date":"not-a-date","valid_from":"2025-06-01T00:00:00Z"}"#;
        let err = KnowledgeGraph::load(test_ontology(), line).unwrap_err();
        assert!(matches!(err, StoreError::ParseLine { line: 1, .. }));
    }

    #[test]
    fn extracted_score_must_be_one_on_load() {
        let line = r#"{"subject":"SST_2","relation":"suitable_for","object":"URLLC","predicted":false,"score":0.8,"doc_uri":"d","paragraph":0,"source_family":"spec","revision_date":"2025-06-01T00:00:00Z","valid_from":"2025-06-01T00:00:00Z"}"#;
        let err = KnowledgeGraph::load(test_ontology(), line).unwrap_err();
        assert!(matches!(err, StoreError::ParseLine { .. }));
    }

    #[test]
    fn determinism_same_batch_same_bytes() {
        let batch = || {
            vec![
                Triple::extracted(
                    "SST_2",
                    "suitable_for",
                    Node::entity("URLLC"),
                    prov("doc://spec/sst", "2025-06-01T00:00:00Z"),
                    ts("2025-06-01T00:00:00Z"),
                ),
                latency("SliceProfile_A", 50, "2025-06-01T00:00:00Z"),
                latency("SliceProfile_A", 80, "2025-07-01T00:00:00Z"),
            ]
        };
        let mut a = kg();
        let mut b = kg();
        a.insert_batch(batch()).unwrap();
        b.insert_batch(batch()).unwrap();
        assert_eq!(a.dump(), b.dump());
        assert_eq!(a.revision(), b.revision());
        assert_eq!(a, b);
    }

    #[test]
    fn explicit_supersede_validates_its_preconditions() {
        let mut g = kg();
        g.insert(latency("SliceProfile_A", 50, "2025-06-01T00:00:00Z")).unwrap();
        g.insert(Triple::extracted(
            "SST_2",
            "suitable_for",
            Node::entity("URLLC"),
            prov("doc://spec/sst", "2025-06-01T00:00:00Z"),
            ts("2025-06-01T00:00:00Z"),
        ))
        .unwrap();
        let ids: Vec<TripleId> = g.triples().map(|t| t.id).collect();
        let err = g.supersede(ids[0], ids[1]).unwrap_err();
        assert!(matches!(err, StoreError::BadSupersede { .. }));
    }
}
