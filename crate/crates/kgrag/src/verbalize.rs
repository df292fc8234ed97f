//! Template verbalization of triples and citation-tagged prompt assembly.
//!
//! Each relation has exactly one sentence template, so a triple always
//! renders to the same declarative sentence. Prompts list the evidence
//! sentences in rank order under dense `[T1]..[Tn]` tags, each tag
//! resolvable back to the triple id and provenance it quotes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{Node, Provenance, Triple, TripleId};

/// Marker line used in place of the evidence block when nothing was
/// retrieved. Generation backends key abstention off this.
pub const NO_EVIDENCE_MARKER: &str = "No KG evidence retrieved.";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Template {
    pub relation: String,
    /// Sentence pattern containing `{subject}` and `{object}` exactly once.
    pub pattern: String,
    /// Unit rendering for literal objects, with a `{value}` slot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub literal_format: Option<String>,
}

#[derive(Debug, Error)]
pub enum VerbalizeError {
    #[error("no template for relation `{0}`")]
    MissingTemplate(String),
    #[error("template for `{relation}` is malformed: {reason}")]
    BadTemplate { relation: String, reason: String },
    #[error("duplicate template for relation `{0}`")]
    DuplicateTemplate(String),
    #[error("parsing template file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("reading template file: {0}")]
    Io(#[from] std::io::Error),
}

/// Human display form of an entity id. Catalog-style ids with numeric
/// suffixes render as their spoken names ("SST_2" as "SST Type 2",
/// "FiveQI_92" as "5QI 92"); everything else is reused verbatim.
pub fn display_entity(id: &str) -> String {
    for (prefix, spoken) in [("SST_", "SST Type "), ("FiveQI_", "5QI ")] {
        if let Some(rest) = id.strip_prefix(prefix) {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                return format!("{spoken}{rest}");
            }
        }
    }
    id.to_string()
}

#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: BTreeMap<String, Template>,
}

impl TemplateSet {
    pub fn from_json(text: &str) -> Result<Self, VerbalizeError> {
        let list: Vec<Template> = serde_json::from_str(text)?;
        let mut templates = BTreeMap::new();
        for t in list {
            validate_template(&t)?;
            if templates.insert(t.relation.clone(), t.clone()).is_some() {
                return Err(VerbalizeError::DuplicateTemplate(t.relation));
            }
        }
        Ok(TemplateSet { templates })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, VerbalizeError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn template(&self, relation: &str) -> Option<&Template> {
        self.templates.get(relation)
    }

    pub fn relations(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    /// Render a triple as its canonical declarative sentence.
    pub fn verbalize(&self, t: &Triple) -> Result<String, VerbalizeError> {
        let template = self
            .templates
            .get(&t.relation)
            .ok_or_else(|| VerbalizeError::MissingTemplate(t.relation.clone()))?;
        let object = match &t.object {
            Node::Entity(id) => display_entity(id),
            Node::Literal(lit) => match &template.literal_format {
                Some(fmt) => fmt.replace("{value}", &lit.render_value()),
                None => lit.render_value(),
            },
        };
        Ok(template
            .pattern
            .replace("{subject}", &display_entity(&t.subject))
            .replace("{object}", &object))
    }
}

fn validate_template(t: &Template) -> Result<(), VerbalizeError> {
    let fail = |reason: &str| VerbalizeError::BadTemplate {
        relation: t.relation.clone(),
        reason: reason.to_string(),
    };
    if t.relation.is_empty() {
        return Err(fail("empty relation name"));
    }
    for slot in ["{subject}", "{object}"] {
        match t.pattern.matches(slot).count() {
            1 => {}
            0 => return Err(fail(&format!("pattern is missing the {slot} slot"))),
            _ => return Err(fail(&format!("pattern repeats the {slot} slot"))),
        }
    }
    if let Some(fmt) = &t.literal_format {
        if !fmt.contains("{value}") {
            return Err(fail("literal_format is missing the {value} slot"));
        }
    }
    Ok(())
}

/// Assembled generation input: tagged evidence sentences then the question.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prompt {
    /// (citation tag, sentence) pairs in rank order.
    pub evidence_lines: Vec<(String, String)>,
    pub question: String,
    /// Full prompt text, byte-deterministic for fixed inputs.
    pub rendered: String,
    citations: BTreeMap<String, Citation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Citation {
    pub triple_id: TripleId,
    pub provenance: Provenance,
}

impl Prompt {
    /// Tag -> (triple id, provenance) for every evidence line. Total: every
    /// tag appearing in the prompt has an entry.
    pub fn cite_map(&self) -> &BTreeMap<String, Citation> {
        &self.citations
    }

    pub fn resolve(&self, tag: &str) -> Option<&Citation> {
        self.citations.get(tag)
    }

    pub fn has_evidence(&self) -> bool {
        !self.evidence_lines.is_empty()
    }
}

/// Build the prompt for a query: one `[Tn]` line per evidence triple in the
/// given rank order, then `Question: …`. Empty evidence renders the
/// no-evidence marker instead of an evidence block.
pub fn build_prompt(
    evidence: &[&Triple],
    question: &str,
    templates: &TemplateSet,
) -> Result<Prompt, VerbalizeError> {
    let mut evidence_lines = Vec::with_capacity(evidence.len());
    let mut citations = BTreeMap::new();
    let mut rendered = String::new();
    for (i, t) in evidence.iter().enumerate() {
        let tag = format!("T{}", i + 1);
        let sentence = templates.verbalize(t)?;
        rendered.push_str(&format!("[{tag}] {sentence}\n"));
        citations.insert(
            tag.clone(),
            Citation { triple_id: t.id, provenance: t.provenance.clone() },
        );
        evidence_lines.push((tag, sentence));
    }
    if evidence.is_empty() {
        rendered.push_str(NO_EVIDENCE_MARKER);
        rendered.push('\n');
    }
    rendered.push_str(&format!("Question: {question}"));
    Ok(Prompt { evidence_lines, question: question.to_string(), rendered, citations })
}
