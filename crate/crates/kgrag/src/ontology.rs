//! Entity-type and relation-type registry with permitted relation signatures.
//!
//! The ontology is the schema layer every stored triple is checked against:
//! which entity types exist, which relations exist, whether a relation is
//! functional (at most one live object per subject), and which
//! (head type, relation, tail type) combinations are permitted. Tails are
//! either entity types or one of the four literal domains.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Closed set of semantic classes a relation can carry. Retrieval matches
/// these against the query class, so the set is fixed rather than open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticClass {
    Structural,
    QosAttribute,
    SlicingConstraint,
    LatencyThreshold,
    Operational,
}

impl fmt::Display for SemanticClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SemanticClass::Structural => "structural",
            SemanticClass::QosAttribute => "qos_attribute",
            SemanticClass::SlicingConstraint => "slicing_constraint",
            SemanticClass::LatencyThreshold => "latency_threshold",
            SemanticClass::Operational => "operational",
        };
        f.write_str(s)
    }
}

/// Typed literal domains a signature tail may name instead of an entity type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiteralDomain {
    Integer,
    DurationMs,
    RateMbps,
    Text,
}

impl LiteralDomain {
    pub fn tag(&self) -> &'static str {
        match self {
            LiteralDomain::Integer => "integer",
            LiteralDomain::DurationMs => "duration_ms",
            LiteralDomain::RateMbps => "rate_mbps",
            LiteralDomain::Text => "text",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "integer" => Some(LiteralDomain::Integer),
            "duration_ms" => Some(LiteralDomain::DurationMs),
            "rate_mbps" => Some(LiteralDomain::RateMbps),
            "text" => Some(LiteralDomain::Text),
            _ => None,
        }
    }
}

impl fmt::Display for LiteralDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityType {
    pub name: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationType {
    pub name: String,
    /// Functional relations admit at most one live object per subject.
    pub functional: bool,
    pub semantic_class: SemanticClass,
}

/// A signature tail: either a named entity type or a literal domain.
/// The four literal-domain tags are reserved and cannot name entity types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TailType {
    Entity(String),
    Literal(LiteralDomain),
}

impl TailType {
    fn parse(s: &str) -> Self {
        match LiteralDomain::from_tag(s) {
            Some(d) => TailType::Literal(d),
            None => TailType::Entity(s.to_string()),
        }
    }
}

impl fmt::Display for TailType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailType::Entity(n) => f.write_str(n),
            TailType::Literal(d) => f.write_str(d.tag()),
        }
    }
}

impl Serialize for TailType {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TailType {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        Ok(TailType::parse(&s))
    }
}

/// One permitted (head type, relation, tail type) combination.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub head: String,
    pub relation: String,
    pub tail: TailType,
}

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("malformed ontology JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate {kind} definition `{name}`")]
    Duplicate { kind: &'static str, name: String },
    #[error("invalid {kind} name `{name}` (expected [A-Za-z][A-Za-z0-9_]*)")]
    BadName { kind: &'static str, name: String },
    #[error("{kind} name `{name}` is a reserved literal domain tag")]
    ReservedName { kind: &'static str, name: String },
    #[error("signature references unknown {kind} `{name}`")]
    UnknownRef { kind: &'static str, name: String },
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("reading ontology file: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
struct OntologyFile {
    entity_types: Vec<EntityType>,
    relation_types: Vec<RelationType>,
    signatures: Vec<Signature>,
}

/// Validated schema registry. `version` starts at 1 on load and bumps on
/// every mutation, so stores can record which schema revision they saw.
#[derive(Debug, Clone, PartialEq)]
pub struct Ontology {
    entity_types: BTreeMap<String, EntityType>,
    relation_types: BTreeMap<String, RelationType>,
    signatures: Vec<Signature>,
    version: u32,
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Ontology {
    /// Empty ontology, version 1. Useful as a base for programmatic schemas.
    pub fn empty() -> Self {
        Ontology {
            entity_types: BTreeMap::new(),
            relation_types: BTreeMap::new(),
            signatures: Vec::new(),
            version: 1,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, OntologyError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, OntologyError> {
        let file: OntologyFile = serde_json::from_str(text)?;
        let mut o = Ontology::empty();
        for et in file.entity_types {
            o.insert_entity_type(et)?;
        }
        for rt in file.relation_types {
            o.insert_relation_type(rt)?;
        }
        for sig in file.signatures {
            o.insert_signature(sig)?;
        }
        o.version = 1;
        Ok(o)
    }

    pub fn to_json(&self) -> String {
        let file = OntologyFile {
            entity_types: self.entity_types.values().cloned().collect(),
            relation_types: self.relation_types.values().cloned().collect(),
            signatures: self.signatures.clone(),
        };
        serde_json::to_string_pretty(&file).expect("ontology serializes")
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    /// True iff (head type, relation, tail) is a permitted signature.
    /// Never errors: unknown names simply yield false.
    pub fn permits(&self, head_type: &str, relation: &str, tail: &TailType) -> bool {
        self.signatures
            .iter()
            .any(|s| s.head == head_type && s.relation == relation && &s.tail == tail)
    }

    /// Semantic class of a relation; unknown relations are an error so
    /// callers cannot silently misclassify.
    pub fn classify_relation(&self, relation: &str) -> Result<SemanticClass, OntologyError> {
        self.relation_types
            .get(relation)
            .map(|r| r.semantic_class)
            .ok_or_else(|| OntologyError::UnknownRelation(relation.to_string()))
    }

    pub fn relation(&self, name: &str) -> Option<&RelationType> {
        self.relation_types.get(name)
    }

    pub fn entity_type(&self, name: &str) -> Option<&EntityType> {
        self.entity_types.get(name)
    }

    pub fn entity_types(&self) -> impl Iterator<Item = &EntityType> {
        self.entity_types.values()
    }

    pub fn relations(&self) -> impl Iterator<Item = &RelationType> {
        self.relation_types.values()
    }

    pub fn signatures(&self) -> &[Signature] {
        &self.signatures
    }

    pub fn signatures_for<'a>(
        &'a self,
        relation: &'a str,
    ) -> impl Iterator<Item = &'a Signature> + 'a {
        self.signatures.iter().filter(move |s| s.relation == relation)
    }

    pub fn add_entity_type(&mut self, et: EntityType) -> Result<(), OntologyError> {
        self.insert_entity_type(et)?;
        self.version += 1;
        Ok(())
    }

    pub fn add_relation_type(&mut self, rt: RelationType) -> Result<(), OntologyError> {
        self.insert_relation_type(rt)?;
        self.version += 1;
        Ok(())
    }

    pub fn add_signature(&mut self, sig: Signature) -> Result<(), OntologyError> {
        self.insert_signature(sig)?;
        self.version += 1;
        Ok(())
    }

    fn insert_entity_type(&mut self, et: EntityType) -> Result<(), OntologyError> {
        if !valid_name(&et.name) {
            return Err(OntologyError::BadName { kind: "entity type", name: et.name });
        }
        if LiteralDomain::from_tag(&et.name).is_some() {
            return Err(OntologyError::ReservedName { kind: "entity type", name: et.name });
        }
        if self.entity_types.contains_key(&et.name) {
            return Err(OntologyError::Duplicate { kind: "entity type", name: et.name });
        }
        self.entity_types.insert(et.name.clone(), et);
        Ok(())
    }

    fn insert_relation_type(&mut self, rt: RelationType) -> Result<(), OntologyError> {
        if !valid_name(&rt.name) {
            return Err(OntologyError::BadName { kind: "relation", name: rt.name });
        }
        if self.relation_types.contains_key(&rt.name) {
            return Err(OntologyError::Duplicate { kind: "relation", name: rt.name });
        }
        self.relation_types.insert(rt.name.clone(), rt);
        Ok(())
    }

    fn insert_signature(&mut self, sig: Signature) -> Result<(), OntologyError> {
        if !self.entity_types.contains_key(&sig.head) {
            return Err(OntologyError::UnknownRef { kind: "entity type", name: sig.head });
        }
        if !self.relation_types.contains_key(&sig.relation) {
            return Err(OntologyError::UnknownRef { kind: "relation", name: sig.relation });
        }
        if let TailType::Entity(name) = &sig.tail {
            if !self.entity_types.contains_key(name) {
                return Err(OntologyError::UnknownRef {
                    kind: "entity type",
                    name: name.clone(),
                });
            }
        }
        // Signatures form a set; re-adding an existing one is a no-op.
        if !self.signatures.contains(&sig) {
            self.signatures.push(sig);
        }
        Ok(())
    }
}
