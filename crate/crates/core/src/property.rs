//! Property records and the cost configuration.
//!
//! A [`PropertyRecord`] is the normalized form of one data sample after the
//! modality-specific identifiers have run: record-level metadata, entities
//! with attribute maps, and binary relations between entities. The
//! [`CostConfig`] carries the per-property replacement/insertion penalties
//! that parameterize content edit distance.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// A property value: either a single categorical token or an ordered list of
/// tokens. An empty scalar (or empty list) denotes the NULL value, i.e. the
/// property is declared but carries no value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PropertyValue {
    Scalar(String),
    List(Vec<String>),
}

impl PropertyValue {
    pub fn scalar(s: impl Into<String>) -> Self {
        PropertyValue::Scalar(s.into())
    }

    pub fn list<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        PropertyValue::List(items.into_iter().map(Into::into).collect())
    }

    /// NULL sentinel: a value that is declared but empty.
    pub fn null() -> Self {
        PropertyValue::Scalar(String::new())
    }

    pub fn is_list(&self) -> bool {
        matches!(self, PropertyValue::List(_))
    }

    pub fn is_null(&self) -> bool {
        match self {
            PropertyValue::Scalar(s) => s.is_empty(),
            PropertyValue::List(v) => v.is_empty(),
        }
    }

    /// Value as a token sequence. A NULL scalar yields no tokens.
    pub fn tokens(&self) -> &[String] {
        match self {
            PropertyValue::Scalar(s) if s.is_empty() => &[],
            PropertyValue::Scalar(s) => std::slice::from_ref(s),
            PropertyValue::List(v) => v,
        }
    }

    /// Trim whitespace; drop empty list items. Applied at parse time.
    fn normalize(&mut self) {
        match self {
            PropertyValue::Scalar(s) => {
                let t = s.trim();
                if t.len() != s.len() {
                    *s = t.to_string();
                }
            }
            PropertyValue::List(v) => {
                for item in v.iter_mut() {
                    let t = item.trim();
                    if t.len() != item.len() {
                        *item = t.to_string();
                    }
                }
                v.retain(|item| !item.is_empty());
            }
        }
    }
}

/// Data sample modality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Text,
    Image,
    Video,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Modality::Text => "text",
            Modality::Image => "image",
            Modality::Video => "video",
        };
        f.write_str(s)
    }
}

impl FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Modality::Text),
            "image" => Ok(Modality::Image),
            "video" => Ok(Modality::Video),
            other => Err(format!("unknown modality `{other}`")),
        }
    }
}

/// One described object inside a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entity {
    pub id: String,
    pub entity_type: String,
    #[serde(default)]
    pub primary: bool,
    #[serde(default)]
    pub attrs: BTreeMap<String, PropertyValue>,
}

/// A binary relation between two entities of the same record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Relation {
    pub name: String,
    pub subject: String,
    pub object: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
}

/// One data sample's extracted properties.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertyRecord {
    pub id: String,
    pub modality: Modality,
    #[serde(default)]
    pub metadata: BTreeMap<String, PropertyValue>,
    #[serde(default)]
    pub entities: Vec<Entity>,
    #[serde(default)]
    pub relations: Vec<Relation>,
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("record `{record}`: empty record id")]
    EmptyId { record: String },
    #[error("record `{record}`: entity `{id}`: empty entity_type")]
    EmptyEntityType { record: String, id: String },
    #[error("record `{record}`: duplicate entity id `{id}`")]
    DuplicateEntityId { record: String, id: String },
    #[error("record `{record}`: relation `{name}`: dangling relation endpoint `{endpoint}`")]
    DanglingEndpoint {
        record: String,
        name: String,
        endpoint: String,
    },
    #[error("record `{record}`: relation `{name}`: subject equals object `{id}`")]
    SelfRelation {
        record: String,
        name: String,
        id: String,
    },
}

/// Case-fold and hyphen-normalize a property name so `TOP_COLOR`, `Top Color`
/// and `top-color` all compare equal.
pub fn normalize_property_name(name: &str) -> String {
    name.trim()
        .to_lowercase()
        .chars()
        .map(|c| if c == '_' || c == ' ' { '-' } else { c })
        .collect()
}

fn normalize_props(props: &mut BTreeMap<String, PropertyValue>) {
    let keys: Vec<String> = props.keys().cloned().collect();
    for key in keys {
        let norm = normalize_property_name(&key);
        let mut value = props.remove(&key).unwrap();
        value.normalize();
        props.insert(norm, value);
    }
}

impl PropertyRecord {
    /// Normalize property names/values in place and check the record
    /// invariants: unique entity ids, relation endpoints that resolve.
    pub fn validate(&mut self) -> Result<(), RecordError> {
        if self.id.trim().is_empty() {
            return Err(RecordError::EmptyId {
                record: self.id.clone(),
            });
        }
        normalize_props(&mut self.metadata);

        let mut seen = BTreeSet::new();
        for entity in &mut self.entities {
            if entity.entity_type.trim().is_empty() {
                return Err(RecordError::EmptyEntityType {
                    record: self.id.clone(),
                    id: entity.id.clone(),
                });
            }
            if !seen.insert(entity.id.clone()) {
                return Err(RecordError::DuplicateEntityId {
                    record: self.id.clone(),
                    id: entity.id.clone(),
                });
            }
            normalize_props(&mut entity.attrs);
        }
        for relation in &self.relations {
            for endpoint in [&relation.subject, &relation.object] {
                if !seen.contains(endpoint) {
                    return Err(RecordError::DanglingEndpoint {
                        record: self.id.clone(),
                        name: relation.name.clone(),
                        endpoint: endpoint.clone(),
                    });
                }
            }
            if relation.subject == relation.object {
                return Err(RecordError::SelfRelation {
                    record: self.id.clone(),
                    name: relation.name.clone(),
                    id: relation.subject.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    /// Canonical JSON form; map keys are sorted, so equal records serialize
    /// identically.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("record serialization cannot fail")
    }
}

/// Parse and validate one record from JSON text.
pub fn parse_record(json_text: &str) -> Result<PropertyRecord, RecordError> {
    let mut record: PropertyRecord = serde_json::from_str(json_text)?;
    record.validate()?;
    Ok(record)
}

/// Which assignment variant to run on the cost matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MunkresVariant {
    #[default]
    Adjacency,
    Cumulative,
}

impl FromStr for MunkresVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adjacency" => Ok(MunkresVariant::Adjacency),
            "cumulative" => Ok(MunkresVariant::Cumulative),
            other => Err(format!("unknown munkres variant `{other}`")),
        }
    }
}

/// Per-property penalties and comparison switches for content edit distance.
///
/// Properties absent from `rcost`/`icost` default to 1.0; `ordcmp` selects
/// ordered list comparison (1) over the unordered default (0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostConfig {
    pub rcost: BTreeMap<String, f64>,
    pub icost: BTreeMap<String, f64>,
    pub ordcmp: BTreeMap<String, u8>,
    pub munkres_variant: MunkresVariant,
    pub edge_icost: f64,
    pub exact_edge_match_zero: bool,
    pub relevance_ced_threshold: f64,
    pub include_metadata: bool,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            rcost: BTreeMap::new(),
            icost: BTreeMap::new(),
            ordcmp: BTreeMap::new(),
            munkres_variant: MunkresVariant::Adjacency,
            edge_icost: 1.0,
            exact_edge_match_zero: true,
            relevance_ced_threshold: 3.0,
            include_metadata: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed cost config JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cost config: negative cost for `{name}`: {value}")]
    NegativeCost { name: String, value: f64 },
    #[error("cost config: non-finite cost for `{name}`")]
    NonFiniteCost { name: String },
    #[error("cost config: ordcmp for `{name}` must be 0 or 1, got {value}")]
    BadOrdcmp { name: String, value: u8 },
}

impl CostConfig {
    pub fn rcost_for(&self, property: &str) -> f64 {
        self.rcost.get(property).copied().unwrap_or(1.0)
    }

    pub fn icost_for(&self, property: &str) -> f64 {
        self.icost.get(property).copied().unwrap_or(1.0)
    }

    /// True when the property's list values compare in order.
    pub fn ordered_for(&self, property: &str) -> bool {
        self.ordcmp.get(property).copied().unwrap_or(0) == 1
    }

    fn check(mut self) -> Result<Self, ConfigError> {
        for map in [&mut self.rcost, &mut self.icost] {
            let keys: Vec<String> = map.keys().cloned().collect();
            for key in keys {
                let value = map.remove(&key).unwrap();
                if !value.is_finite() {
                    return Err(ConfigError::NonFiniteCost { name: key });
                }
                if value < 0.0 {
                    return Err(ConfigError::NegativeCost { name: key, value });
                }
                map.insert(normalize_property_name(&key), value);
            }
        }
        let keys: Vec<String> = self.ordcmp.keys().cloned().collect();
        for key in keys {
            let value = self.ordcmp.remove(&key).unwrap();
            if value > 1 {
                return Err(ConfigError::BadOrdcmp { name: key, value });
            }
            self.ordcmp.insert(normalize_property_name(&key), value);
        }
        for (name, value) in [
            ("edge_icost", self.edge_icost),
            ("relevance_ced_threshold", self.relevance_ced_threshold),
        ] {
            if !value.is_finite() {
                return Err(ConfigError::NonFiniteCost { name: name.into() });
            }
        }
        if self.edge_icost < 0.0 {
            return Err(ConfigError::NegativeCost {
                name: "edge_icost".into(),
                value: self.edge_icost,
            });
        }
        Ok(self)
    }
}

/// Parse a cost config from JSON, apply defaults, and check invariants.
/// Validating an already-validated config is the identity.
pub fn validate_cost_config(raw: &str) -> Result<CostConfig, ConfigError> {
    let config: CostConfig = serde_json::from_str(raw)?;
    config.check()
}
