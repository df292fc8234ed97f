//! Document ingestion: chunking, tuple extraction, and normalization.
//!
//! Raw documents are split into paragraph chunks, scanned for candidate
//! (subject, relation, object) tuples by pattern rules and an optional
//! extractor backend, then normalized against the alias table and checked
//! against the ontology before insertion into a [`KnowledgeGraph`].
//!
//! The two extraction routes are deliberately asymmetric. Pattern rules are
//! validated once at load time and emit candidates at confidence 1.0; a
//! backend emits scored candidates that are screened twice, first by schema
//! admissibility on the raw surfaces and then by a confidence floor. Both
//! routes converge in [`normalize`], which resolves surface forms to
//! canonical entity ids and deduplicates repeated statements, keeping the
//! earliest provenance seen.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{LiteralDomain, Ontology, TailType};
use crate::store::{
    schema_admissible, InsertOutcome, KnowledgeGraph, Literal, Node, Provenance, SourceFamily,
    StoreError, Triple,
};
use crate::text::fold;

/// Paragraphs longer than this are split at sentence boundaries.
pub const DEFAULT_MAX_CHUNK_CHARS: usize = 2000;

/// Backend candidates scored below this are dropped.
pub const DEFAULT_MIN_CONFIDENCE: f64 = 0.5;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("document is empty or whitespace only")]
    EmptyDocument,
    #[error("chunk size limit must be positive")]
    ZeroChunkSize,
    #[error("extraction rule `{rule}` is invalid: {reason}")]
    BadRule { rule: String, reason: String },
    #[error("alias `{surface}` maps to both `{existing}` and `{incoming}`")]
    AliasConflict {
        surface: String,
        existing: String,
        incoming: String,
    },
    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },
    #[error("extractor backend failed: {0}")]
    Backend(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One paragraph-sized piece of a source document, carrying the provenance
/// coordinates every extracted fact will inherit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentChunk {
    pub doc_uri: String,
    pub paragraph: u32,
    pub text: String,
    pub source_family: SourceFamily,
}

/// Object slot of a candidate before normalization: either an entity surface
/// form awaiting alias resolution, or an already-typed literal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateObject {
    Entity(String),
    Literal(Literal),
}

/// An extracted tuple prior to normalization. Subject and entity objects are
/// raw surface forms exactly as they appeared in the document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTriple {
    pub subject_surface: String,
    pub relation: String,
    pub object: CandidateObject,
    pub confidence: f64,
    pub doc_uri: String,
    pub paragraph: u32,
    pub source_family: SourceFamily,
}

/// A candidate the normalizer could not admit, with the reason kept for the
/// ingest report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedCandidate {
    pub candidate: CandidateTriple,
    pub reason: String,
}

/// Split a document into chunks at blank-line boundaries.
///
/// Chunks are numbered by output ordinal starting at 1, so a paragraph that
/// exceeds `max_chunk_chars` and splits into several chunks consumes several
/// consecutive numbers. Zero never appears as a document paragraph, which
/// keeps it free as the sentinel for non-document provenance. Splitting an overlong paragraph happens at sentence
/// boundaries where possible, with each sentence keeping its terminating
/// punctuation and trailing whitespace, so concatenating the resulting chunk
/// texts reproduces the paragraph exactly. A single unbroken run longer than
/// the limit falls back to a hard split at the limit.
pub fn chunk_document(
    doc_uri: &str,
    raw_text: &str,
    source_family: SourceFamily,
    max_chunk_chars: usize,
) -> Result<Vec<DocumentChunk>, IngestError> {
    if max_chunk_chars == 0 {
        return Err(IngestError::ZeroChunkSize);
    }
    if raw_text.trim().is_empty() {
        return Err(IngestError::EmptyDocument);
    }

    let mut chunks = Vec::new();
    let mut next = 1u32;
    for paragraph in split_paragraphs(raw_text) {
        for text in split_to_size(&paragraph, max_chunk_chars) {
            chunks.push(DocumentChunk {
                doc_uri: doc_uri.to_string(),
                paragraph: next,
                text,
                source_family,
            });
            next += 1;
        }
    }
    Ok(chunks)
}

/// Group consecutive non-blank lines; a line that is empty after trimming
/// ends the current paragraph. Inner newlines are preserved.
fn split_paragraphs(text: &str) -> Vec<String> {
    let mut paragraphs = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                paragraphs.push(current.join("\n"));
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        paragraphs.push(current.join("\n"));
    }
    paragraphs
}

fn split_to_size(paragraph: &str, max: usize) -> Vec<String> {
    if paragraph.chars().count() <= max {
        return vec![paragraph.to_string()];
    }
    let mut out = Vec::new();
    let mut current = String::new();
    let mut current_chars = 0usize;
    for piece in split_sentences(paragraph) {
        let piece_chars = piece.chars().count();
        if piece_chars > max {
            if current_chars > 0 {
                out.push(std::mem::take(&mut current));
                current_chars = 0;
            }
            out.extend(hard_split(piece, max));
            continue;
        }
        if current_chars + piece_chars > max && current_chars > 0 {
            out.push(std::mem::take(&mut current));
            current_chars = 0;
        }
        current.push_str(piece);
        current_chars += piece_chars;
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Split after sentence punctuation followed by whitespace or end of text.
/// The punctuation and trailing whitespace stay with the preceding sentence
/// so the pieces concatenate back to the input.
fn split_sentences(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut pieces = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if matches!(bytes[i], b'.' | b'!' | b'?') {
            let mut j = i + 1;
            while j < bytes.len() && matches!(bytes[j], b'.' | b'!' | b'?' | b'"' | b'\'') {
                j += 1;
            }
            let mut k = j;
            while k < bytes.len() && bytes[k].is_ascii_whitespace() {
                k += 1;
            }
            if k > j || j == bytes.len() {
                pieces.push(&text[start..k]);
                start = k;
                i = k;
                continue;
            }
            i = j;
        } else {
            i += 1;
        }
    }
    if start < bytes.len() {
        pieces.push(&text[start..]);
    }
    pieces
}

fn hard_split(text: &str, max: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut count = 0usize;
    for ch in text.chars() {
        current.push(ch);
        count += 1;
        if count == max {
            out.push(std::mem::take(&mut current));
            count = 0;
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// A pattern rule mapping regex captures to a candidate tuple.
///
/// `subject` and `object` are templates over the pattern's named capture
/// groups, written `${name}`. An object template prefixed with a literal
/// domain tag and a colon (for example `duration_ms:${ms}`) produces a typed
/// literal; any other template produces an entity surface form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRule {
    #[serde(default)]
    pub name: Option<String>,
    pub pattern: String,
    pub relation: String,
    pub subject: String,
    pub object: String,
}

impl ExtractionRule {
    fn label(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.pattern)
    }
}

#[derive(Debug, Clone)]
enum ObjectSlot {
    Entity(String),
    Literal(LiteralDomain, String),
}

#[derive(Debug, Clone)]
struct CompiledRule {
    rule: ExtractionRule,
    regex: Regex,
    object: ObjectSlot,
}

/// A validated, compiled set of extraction rules.
#[derive(Debug, Clone)]
pub struct RuleSet {
    rules: Vec<CompiledRule>,
}

impl RuleSet {
    /// Parse and validate rules from a JSON array. Each rule's regex must
    /// compile, its relation must exist in the ontology, every `${name}`
    /// placeholder must name a capture group, and the object slot kind must
    /// be producible by at least one signature of the relation.
    pub fn from_json(text: &str, ontology: &Ontology) -> Result<Self, IngestError> {
        let raw: Vec<ExtractionRule> =
            serde_json::from_str(text).map_err(|e| IngestError::Parse {
                what: "extraction rules".to_string(),
                message: e.to_string(),
            })?;
        let mut rules = Vec::with_capacity(raw.len());
        for rule in raw {
            rules.push(compile_rule(rule, ontology)?);
        }
        Ok(RuleSet { rules })
    }

    pub fn load(path: impl AsRef<Path>, ontology: &Ontology) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, ontology)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

fn compile_rule(rule: ExtractionRule, ontology: &Ontology) -> Result<CompiledRule, IngestError> {
    let bad = |reason: String| IngestError::BadRule {
        rule: rule.label().to_string(),
        reason,
    };

    let regex = Regex::new(&rule.pattern).map_err(|e| bad(format!("bad pattern: {e}")))?;
    if ontology.relation(&rule.relation).is_none() {
        return Err(bad(format!("unknown relation `{}`", rule.relation)));
    }

    let groups: Vec<&str> = regex.capture_names().flatten().collect();
    let check_refs = |template: &str| -> Result<(), IngestError> {
        for name in template_placeholders(template) {
            if !groups.contains(&name) {
                return Err(bad(format!("template references unknown capture `{name}`")));
            }
        }
        Ok(())
    };
    check_refs(&rule.subject)?;

    let object = match rule.object.split_once(':') {
        Some((tag, value_template)) if LiteralDomain::from_tag(tag).is_some() => {
            let domain = LiteralDomain::from_tag(tag).unwrap();
            check_refs(value_template)?;
            let permits_literal = ontology
                .signatures_for(&rule.relation)
                .any(|sig| sig.tail == TailType::Literal(domain));
            if !permits_literal {
                return Err(bad(format!(
                    "relation `{}` has no {} literal signature",
                    rule.relation,
                    domain.tag()
                )));
            }
            ObjectSlot::Literal(domain, value_template.to_string())
        }
        _ => {
            check_refs(&rule.object)?;
            let permits_entity = ontology
                .signatures_for(&rule.relation)
                .any(|sig| matches!(sig.tail, TailType::Entity(_)));
            if !permits_entity {
                return Err(bad(format!(
                    "relation `{}` has no entity signature",
                    rule.relation
                )));
            }
            ObjectSlot::Entity(rule.object.clone())
        }
    };

    Ok(CompiledRule {
        rule,
        regex,
        object,
    })
}

fn template_placeholders(template: &str) -> Vec<&str> {
    let mut names = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find("${") {
        let after = &rest[start + 2..];
        match after.find('}') {
            Some(end) => {
                names.push(&after[..end]);
                rest = &after[end + 1..];
            }
            None => break,
        }
    }
    names
}

fn expand_template(template: &str, caps: &regex::Captures) -> Option<String> {
    let mut out = String::new();
    let mut rest = template;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find('}')?;
        let name = &after[..end];
        out.push_str(caps.name(name)?.as_str());
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Some(out)
}

fn parse_literal(domain: LiteralDomain, value: &str) -> Option<Literal> {
    match domain {
        LiteralDomain::Integer => value.trim().parse().ok().map(Literal::Integer),
        LiteralDomain::DurationMs => value.trim().parse().ok().map(Literal::DurationMs),
        LiteralDomain::RateMbps => {
            let v: f64 = value.trim().parse().ok()?;
            v.is_finite().then_some(Literal::RateMbps(v))
        }
        LiteralDomain::Text => Some(Literal::Text(value.to_string())),
    }
}

/// Run every rule over a chunk and collect all matches as candidates at
/// confidence 1.0. Malformed numeric captures skip the match.
pub fn extract_rules(chunk: &DocumentChunk, rules: &RuleSet) -> Vec<CandidateTriple> {
    let mut out = Vec::new();
    for compiled in &rules.rules {
        for caps in compiled.regex.captures_iter(&chunk.text) {
            let Some(subject) = expand_template(&compiled.rule.subject, &caps) else {
                continue;
            };
            let object = match &compiled.object {
                ObjectSlot::Entity(template) => match expand_template(template, &caps) {
                    Some(surface) => CandidateObject::Entity(surface),
                    None => continue,
                },
                ObjectSlot::Literal(domain, template) => {
                    let Some(value) = expand_template(template, &caps) else {
                        continue;
                    };
                    match parse_literal(*domain, &value) {
                        Some(lit) => CandidateObject::Literal(lit),
                        None => continue,
                    }
                }
            };
            out.push(CandidateTriple {
                subject_surface: subject,
                relation: compiled.rule.relation.clone(),
                object,
                confidence: 1.0,
                doc_uri: chunk.doc_uri.clone(),
                paragraph: chunk.paragraph,
                source_family: chunk.source_family,
            });
        }
    }
    out
}

/// A tuple proposed by an extractor backend for one chunk, before provenance
/// is attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCandidate {
    pub subject_surface: String,
    pub relation: String,
    pub object: CandidateObject,
    pub confidence: f64,
}

/// Anything that can propose candidate tuples for a chunk: a remote
/// extraction model, a local heuristic, or the bundled mock.
pub trait ExtractorBackend: Send + Sync {
    fn extract(&self, chunk: &DocumentChunk) -> Result<Vec<RawCandidate>, IngestError>;
}

/// Outcome of running a backend over one chunk.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ModelExtraction {
    pub kept: Vec<CandidateTriple>,
    pub schema_rejected: usize,
    pub below_confidence: usize,
}

/// Screen backend output: candidates whose raw surfaces cannot be typed
/// under any ontology signature are counted as schema violations, then the
/// survivors are filtered by the confidence floor. The schema check runs
/// again after alias resolution in [`normalize`]; this early pass exists so
/// structurally impossible model output is counted at its source.
pub fn extract_model(
    chunk: &DocumentChunk,
    backend: &dyn ExtractorBackend,
    ontology: &Ontology,
    min_confidence: f64,
) -> Result<ModelExtraction, IngestError> {
    let mut result = ModelExtraction::default();
    for raw in backend.extract(chunk)? {
        let object_node = match &raw.object {
            CandidateObject::Entity(surface) => Node::Entity(surface.clone()),
            CandidateObject::Literal(lit) => Node::Literal(lit.clone()),
        };
        if schema_admissible(ontology, &raw.subject_surface, &raw.relation, &object_node).is_err()
        {
            result.schema_rejected += 1;
            continue;
        }
        if raw.confidence < min_confidence {
            result.below_confidence += 1;
            continue;
        }
        result.kept.push(CandidateTriple {
            subject_surface: raw.subject_surface,
            relation: raw.relation,
            object: raw.object,
            confidence: raw.confidence,
            doc_uri: chunk.doc_uri.clone(),
            paragraph: chunk.paragraph,
            source_family: chunk.source_family,
        });
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MockEntry {
    trigger: String,
    subject: String,
    relation: String,
    object: CandidateObject,
    confidence: f64,
}

/// Deterministic stand-in for a model extractor: each entry fires when its
/// trigger phrase appears, word-aligned, in the folded chunk text.
#[derive(Debug, Clone)]
pub struct MockExtractor {
    entries: Vec<MockEntry>,
}

impl MockExtractor {
    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        let entries: Vec<MockEntry> =
            serde_json::from_str(text).map_err(|e| IngestError::Parse {
                what: "mock extractor entries".to_string(),
                message: e.to_string(),
            })?;
        Ok(MockExtractor { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl ExtractorBackend for MockExtractor {
    fn extract(&self, chunk: &DocumentChunk) -> Result<Vec<RawCandidate>, IngestError> {
        let padded = format!(" {} ", fold(&chunk.text));
        Ok(self
            .entries
            .iter()
            .filter(|entry| padded.contains(&format!(" {} ", fold(&entry.trigger))))
            .map(|entry| RawCandidate {
                subject_surface: entry.subject.clone(),
                relation: entry.relation.clone(),
                object: entry.object.clone(),
                confidence: entry.confidence,
            })
            .collect())
    }
}

/// Maps folded surface forms to canonical entity ids.
#[derive(Debug, Clone, Default)]
pub struct AliasTable {
    map: BTreeMap<String, String>,
}

impl AliasTable {
    /// Parse a JSON object of surface form to canonical id. Keys are folded;
    /// two surfaces that fold identically must agree on the canonical id.
    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        let raw: BTreeMap<String, String> =
            serde_json::from_str(text).map_err(|e| IngestError::Parse {
                what: "alias table".to_string(),
                message: e.to_string(),
            })?;
        let mut table = AliasTable::default();
        for (surface, canonical) in raw {
            table.insert(&surface, &canonical)?;
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn insert(&mut self, surface: &str, canonical: &str) -> Result<(), IngestError> {
        let key = fold(surface);
        match self.map.get(&key) {
            Some(existing) if existing != canonical => Err(IngestError::AliasConflict {
                surface: surface.to_string(),
                existing: existing.clone(),
                incoming: canonical.to_string(),
            }),
            Some(_) => Ok(()),
            None => {
                self.map.insert(key, canonical.to_string());
                Ok(())
            }
        }
    }

    /// Canonical id for a surface form, if the table knows it.
    pub fn resolve(&self, surface: &str) -> Option<&str> {
        self.map.get(&fold(surface)).map(|s| s.as_str())
    }

    /// Canonical ids of every aliased entity mentioned in free text, in
    /// order of first appearance. Matches are word-aligned on the folded
    /// text; when matches overlap, the longest one starting earliest wins.
    pub fn mentions(&self, text: &str) -> Vec<String> {
        let padded = format!(" {} ", fold(text));
        let mut hits: Vec<(usize, usize, &str)> = Vec::new();
        for (key, canonical) in &self.map {
            let needle = format!(" {key} ");
            let mut from = 0;
            while let Some(pos) = padded[from..].find(&needle) {
                hits.push((from + pos + 1, key.len(), canonical));
                from += pos + 1;
            }
        }
        hits.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(a.2.cmp(b.2)));
        let mut out: Vec<String> = Vec::new();
        let mut covered_until = 0;
        for (start, len, canonical) in hits {
            if start < covered_until {
                continue;
            }
            covered_until = start + len;
            if !out.iter().any(|c| c == canonical) {
                out.push(canonical.to_string());
            }
        }
        out
    }

    /// Invert the table: canonical id to its folded surface forms, sorted.
    /// Retrieval appends these to a triple's indexed text so queries that
    /// phrase an entity by a spoken name still overlap lexically.
    pub fn surface_forms(&self) -> BTreeMap<String, Vec<String>> {
        let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (surface, canonical) in &self.map {
            out.entry(canonical.clone()).or_default().push(surface.clone());
        }
        out
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Outcome of normalizing a candidate batch.
#[derive(Debug, Default)]
pub struct NormalizeReport {
    pub triples: Vec<Triple>,
    pub rejects: Vec<RejectedCandidate>,
}

/// Resolve surfaces to canonical ids, re-check schema admissibility on the
/// canonical forms, and deduplicate by triple identity, keeping the earliest
/// provenance in batch order. Admitted candidates become extracted facts at
/// score 1.0, valid from `revision_date`.
pub fn normalize(
    candidates: Vec<CandidateTriple>,
    aliases: &AliasTable,
    ontology: &Ontology,
    revision_date: DateTime<Utc>,
) -> NormalizeReport {
    let mut report = NormalizeReport::default();
    let mut seen = std::collections::BTreeSet::new();
    for candidate in candidates {
        let reject = |candidate: CandidateTriple, reason: String| RejectedCandidate {
            candidate,
            reason,
        };

        let Some(subject) = aliases.resolve(&candidate.subject_surface) else {
            let reason = format!("no alias for subject `{}`", candidate.subject_surface);
            report.rejects.push(reject(candidate, reason));
            continue;
        };
        let subject = subject.to_string();

        let object = match &candidate.object {
            CandidateObject::Entity(surface) => match aliases.resolve(surface) {
                Some(canonical) => Node::Entity(canonical.to_string()),
                None => {
                    let reason = format!("no alias for object `{surface}`");
                    report.rejects.push(reject(candidate, reason));
                    continue;
                }
            },
            CandidateObject::Literal(lit) => Node::Literal(lit.clone()),
        };

        if let Err(reason) = schema_admissible(ontology, &subject, &candidate.relation, &object) {
            report.rejects.push(reject(candidate, reason));
            continue;
        }

        let provenance = Provenance {
            doc_uri: candidate.doc_uri.clone(),
            paragraph: candidate.paragraph,
            source_family: candidate.source_family,
            revision_date,
        };
        let triple = Triple::extracted(
            subject,
            candidate.relation.clone(),
            object,
            provenance,
            revision_date,
        );
        if seen.insert(triple.id) {
            report.triples.push(triple);
        }
    }
    report
}

/// Knobs for a single ingest run.
#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub max_chunk_chars: usize,
    pub min_confidence: f64,
    pub revision_date: DateTime<Utc>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            max_chunk_chars: DEFAULT_MAX_CHUNK_CHARS,
            min_confidence: DEFAULT_MIN_CONFIDENCE,
            revision_date: Utc::now(),
        }
    }
}

/// Counts from one document's pass through the full pipeline.
#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestReport {
    pub chunks: usize,
    pub rule_candidates: usize,
    pub model_candidates: usize,
    pub model_schema_rejected: usize,
    pub model_below_confidence: usize,
    pub rejects: Vec<RejectedCandidate>,
    pub inserted: usize,
    pub superseded: usize,
    pub already_present: usize,
    pub rejected_conflict: usize,
    pub rejected_schema: usize,
}

/// Chunk a document, run both extraction routes, normalize, and insert into
/// the graph. Re-ingesting an unchanged document is a no-op: every admitted
/// candidate resolves to a triple the graph already holds.
#[allow(clippy::too_many_arguments)]
pub fn ingest_document(
    kg: &mut KnowledgeGraph,
    doc_uri: &str,
    text: &str,
    source_family: SourceFamily,
    rules: &RuleSet,
    aliases: &AliasTable,
    backend: Option<&dyn ExtractorBackend>,
    opts: &IngestOptions,
) -> Result<IngestReport, IngestError> {
    let chunks = chunk_document(doc_uri, text, source_family, opts.max_chunk_chars)?;
    let mut report = IngestReport {
        chunks: chunks.len(),
        ..IngestReport::default()
    };

    let mut candidates = Vec::new();
    for chunk in &chunks {
        let from_rules = extract_rules(chunk, rules);
        report.rule_candidates += from_rules.len();
        candidates.extend(from_rules);
        if let Some(backend) = backend {
            let extraction = extract_model(chunk, backend, kg.ontology(), opts.min_confidence)?;
            report.model_candidates += extraction.kept.len();
            report.model_schema_rejected += extraction.schema_rejected;
            report.model_below_confidence += extraction.below_confidence;
            candidates.extend(extraction.kept);
        }
    }

    let normalized = normalize(candidates, aliases, kg.ontology(), opts.revision_date);
    report.rejects = normalized.rejects;
    for triple in normalized.triples {
        match kg.insert(triple)? {
            InsertOutcome::Inserted { .. } => report.inserted += 1,
            InsertOutcome::SupersededPrior { .. } => {
                report.inserted += 1;
                report.superseded += 1;
            }
            InsertOutcome::AlreadyPresent { .. } => report.already_present += 1,
            InsertOutcome::RejectedConflict { .. } => report.rejected_conflict += 1,
            InsertOutcome::RejectedSchema { .. } => report.rejected_schema += 1,
        }
    }
    Ok(report)
}
