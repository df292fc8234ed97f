//! Hallucination audit: checks answer claims against the graph.
//!
//! Answers are audited as structured claims, one (subject, relation, object)
//! assertion at a time. Each claim gets exactly one label:
//!
//! * `supported`: a live triple matches the claim exactly.
//! * `outdated`: only a superseded triple matches, and a live triple for the
//!   same subject and relation now says something else.
//! * `fabricated`: the relation is functional and the live value contradicts
//!   the claim.
//! * `unverifiable`: nothing in the graph speaks to the claim.
//! * `off_topic`: the whole claim set shares no entity with the query.
//!
//! Rules are evaluated in that order, so a claim matching a superseded value
//! of a functional relation is `outdated`, not `fabricated`. Labels carrying
//! a witness list cite the exact triples that justify them.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::AliasTable;
use crate::store::{KnowledgeGraph, Node, TripleId};

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("answers line {line}: {message}")]
    ParseLine { line: usize, message: String },
    #[error("reading answers file: {0}")]
    Io(#[from] std::io::Error),
}

/// One checkable assertion lifted from an answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub subject: String,
    pub relation: String,
    pub object: Node,
    /// Identifier of the answer that asserted this claim.
    #[serde(default)]
    pub asserted_by: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditLabel {
    Supported,
    Outdated,
    Fabricated,
    Unverifiable,
    OffTopic,
}

impl AuditLabel {
    pub const ALL: [AuditLabel; 5] = [
        AuditLabel::Supported,
        AuditLabel::Outdated,
        AuditLabel::Fabricated,
        AuditLabel::Unverifiable,
        AuditLabel::OffTopic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AuditLabel::Supported => "supported",
            AuditLabel::Outdated => "outdated",
            AuditLabel::Fabricated => "fabricated",
            AuditLabel::Unverifiable => "unverifiable",
            AuditLabel::OffTopic => "off_topic",
        }
    }
}

/// Label plus the triples that justify it. `supported`, `outdated`, and
/// `fabricated` always carry at least one witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditVerdict {
    pub label: AuditLabel,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witness: Vec<TripleId>,
}

/// Claim counts per label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub supported: usize,
    pub outdated: usize,
    pub fabricated: usize,
    pub unverifiable: usize,
    pub off_topic: usize,
}

impl LabelCounts {
    pub fn bump(&mut self, label: AuditLabel) {
        match label {
            AuditLabel::Supported => self.supported += 1,
            AuditLabel::Outdated => self.outdated += 1,
            AuditLabel::Fabricated => self.fabricated += 1,
            AuditLabel::Unverifiable => self.unverifiable += 1,
            AuditLabel::OffTopic => self.off_topic += 1,
        }
    }

    pub fn get(&self, label: AuditLabel) -> usize {
        match label {
            AuditLabel::Supported => self.supported,
            AuditLabel::Outdated => self.outdated,
            AuditLabel::Fabricated => self.fabricated,
            AuditLabel::Unverifiable => self.unverifiable,
            AuditLabel::OffTopic => self.off_topic,
        }
    }

    pub fn total(&self) -> usize {
        self.supported + self.outdated + self.fabricated + self.unverifiable + self.off_topic
    }

    pub fn add(&mut self, other: &LabelCounts) {
        self.supported += other.supported;
        self.outdated += other.outdated;
        self.fabricated += other.fabricated;
        self.unverifiable += other.unverifiable;
        self.off_topic += other.off_topic;
    }
}

/// Audit one claim against the graph. Total and deterministic: every claim
/// gets exactly one label, and the rules run in a fixed order.
pub fn audit_claim(kg: &KnowledgeGraph, claim: &Claim) -> AuditVerdict {
    // Supported: the exact fact is live right now.
    if kg.has_live(&claim.subject, &claim.relation, &claim.object) {
        let id = crate::store::compute_id(&claim.subject, &claim.relation, &claim.object);
        return AuditVerdict { label: AuditLabel::Supported, witness: vec![id] };
    }

    // Outdated: the fact was once in the graph but a live triple for the
    // same subject and relation now differs.
    if let Some(old) = kg.find_superseded(&claim.subject, &claim.relation, &claim.object) {
        let newer: Vec<TripleId> = kg
            .lookup(Some(&claim.subject), Some(&claim.relation), None)
            .iter()
            .filter(|t| t.object != claim.object)
            .map(|t| t.id)
            .collect();
        if !newer.is_empty() {
            let mut witness = vec![old.id];
            witness.extend(newer);
            return AuditVerdict { label: AuditLabel::Outdated, witness };
        }
    }

    // Fabricated: a functional relation already holds a different live
    // value, so the claim contradicts the graph rather than missing it.
    let functional = kg
        .ontology()
        .relation(&claim.relation)
        .map(|r| r.functional)
        .unwrap_or(false);
    if functional {
        if let Some(live) = kg.functional_value(&claim.subject, &claim.relation) {
            if live.object != claim.object {
                return AuditVerdict { label: AuditLabel::Fabricated, witness: vec![live.id] };
            }
        }
    }

    AuditVerdict { label: AuditLabel::Unverifiable, witness: Vec::new() }
}

/// Entities named by a claim: its subject plus any entity object.
fn claim_entities(claim: &Claim) -> Vec<&str> {
    match &claim.object {
        Node::Entity(e) => vec![claim.subject.as_str(), e.as_str()],
        Node::Literal(_) => vec![claim.subject.as_str()],
    }
}

/// Audit all claims of one answer against the graph and the query text.
/// When the claim set shares zero entities with the query's alias mentions,
/// the answer failed to address the question and every claim is labeled
/// `off_topic`; otherwise claims are audited individually.
pub fn audit_answer(
    kg: &KnowledgeGraph,
    aliases: &AliasTable,
    query: &str,
    claims: &[Claim],
) -> (Vec<AuditVerdict>, LabelCounts) {
    let mut counts = LabelCounts::default();
    if claims.is_empty() {
        return (Vec::new(), counts);
    }

    let mentioned: BTreeSet<String> = aliases.mentions(query).into_iter().collect();
    let overlaps = claims
        .iter()
        .flat_map(claim_entities)
        .any(|e| mentioned.contains(e));

    let verdicts: Vec<AuditVerdict> = if overlaps {
        claims.iter().map(|c| audit_claim(kg, c)).collect()
    } else {
        claims
            .iter()
            .map(|_| AuditVerdict { label: AuditLabel::OffTopic, witness: Vec::new() })
            .collect()
    };
    for v in &verdicts {
        counts.bump(v.label);
    }
    (verdicts, counts)
}

/// One answer to audit: the query it responded to and the claims it made.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub answer_id: String,
    pub query: String,
    pub claims: Vec<Claim>,
}

/// Verdicts for one answer, claims and labels paired by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerAudit {
    pub answer_id: String,
    pub query: String,
    pub claims: Vec<Claim>,
    pub verdicts: Vec<AuditVerdict>,
    pub counts: LabelCounts,
}

/// Whole-run audit report: per-answer verdicts plus aggregate rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub answers: Vec<AnswerAudit>,
    pub totals: LabelCounts,
    /// Fraction of all claims per label; zero when no claims were audited.
    pub rates: Vec<(String, f64)>,
}

/// Audit a batch of answers and aggregate per-type rates.
pub fn audit_answers(
    kg: &KnowledgeGraph,
    aliases: &AliasTable,
    records: &[AnswerRecord],
) -> AuditReport {
    let mut answers = Vec::with_capacity(records.len());
    let mut totals = LabelCounts::default();
    for record in records {
        let mut claims = record.claims.clone();
        for claim in &mut claims {
            if claim.asserted_by.is_empty() {
                claim.asserted_by = record.answer_id.clone();
            }
        }
        let (verdicts, counts) = audit_answer(kg, aliases, &record.query, &claims);
        totals.add(&counts);
        answers.push(AnswerAudit {
            answer_id: record.answer_id.clone(),
            query: record.query.clone(),
            claims,
            verdicts,
            counts,
        });
    }
    let total = totals.total();
    let rates = AuditLabel::ALL
        .iter()
        .map(|&label| {
            let rate = if total == 0 {
                0.0
            } else {
                totals.get(label) as f64 / total as f64
            };
            (label.as_str().to_string(), rate)
        })
        .collect();
    AuditReport { answers, totals, rates }
}

/// Parse one answer record per JSONL line; blank lines are skipped.
pub fn read_answers_jsonl(text: &str) -> Result<Vec<AnswerRecord>, AuditError> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: AnswerRecord =
            serde_json::from_str(line).map_err(|e| AuditError::ParseLine {
                line: i + 1,
                message: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}

pub fn load_answers(path: impl AsRef<Path>) -> Result<Vec<AnswerRecord>, AuditError> {
    let text = std::fs::read_to_string(path)?;
    read_answers_jsonl(&text)
}
