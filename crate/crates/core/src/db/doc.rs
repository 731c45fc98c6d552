//! Config document model: the single structured format (YAML or JSON)
//! with `schema`, `tree`, and `suffixes` keys that database files use.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::schema::SuffixRole;
use super::tree::{ExpansionKind, ExpansionSpec, ListItem, NodeBody, NodeSpec, RangeSpec};
use super::DbError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatabaseDoc {
    pub schema: SchemaDoc,
    #[serde(default)]
    pub suffixes: BTreeMap<String, SuffixRole>,
    #[serde(default)]
    pub tree: Vec<NodeDoc>,
    /// Facility terminology passed into selection context.
    #[serde(default)]
    pub glossary: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaDoc {
    pub pattern: String,
    pub levels: Vec<LevelDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelDoc {
    pub name: String,
    #[serde(default)]
    pub optional: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeDoc {
    #[serde(default)]
    pub value: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expand: Option<ExpandDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpandDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list: Option<Vec<ListItemDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<RangeDoc>,
    /// Template subtree instantiated under every expanded item.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub each: Vec<NodeDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ListItemDoc {
    pub value: String,
    pub description: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RangeDoc {
    pub prefix: String,
    pub lo: i64,
    pub hi: i64,
    #[serde(default)]
    pub pad_width: usize,
    #[serde(default = "default_range_description")]
    pub description: String,
}

fn default_range_description() -> String {
    "unit {n}".to_string()
}

impl NodeDoc {
    pub fn to_spec(&self) -> Result<NodeSpec, DbError> {
        let body = match (&self.expand, self.children.is_empty()) {
            (Some(_), false) => {
                return Err(DbError::Parse(format!(
                    "node '{}' declares both children and an expansion",
                    self.value
                )))
            }
            (Some(exp), true) => NodeBody::Expansion(exp.to_spec(&self.value)?),
            (None, false) => {
                let kids = self
                    .children
                    .iter()
                    .map(NodeDoc::to_spec)
                    .collect::<Result<Vec<_>, _>>()?;
                NodeBody::Children(kids)
            }
            (None, true) => NodeBody::Leaf,
        };
        Ok(NodeSpec {
            level: String::new(),
            value: self.value.clone(),
            description: self.description.clone(),
            name: self.name.clone(),
            metadata: self.metadata.clone(),
            body,
        })
    }
}

impl ExpandDoc {
    fn to_spec(&self, owner: &str) -> Result<ExpansionSpec, DbError> {
        let kind = match (&self.list, &self.range) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(DbError::Parse(format!(
                    "expansion under '{owner}' must declare exactly one of list/range"
                )))
            }
            (Some(items), None) => ExpansionKind::List {
                items: items
                    .iter()
                    .map(|i| ListItem {
                        value: i.value.clone(),
                        description: i.description.clone(),
                    })
                    .collect(),
            },
            (None, Some(r)) => ExpansionKind::Range(RangeSpec {
                prefix: r.prefix.clone(),
                lo: r.lo,
                hi: r.hi,
                pad_width: r.pad_width,
                description: r.description.clone(),
            }),
        };
        let template = self
            .each
            .iter()
            .map(NodeDoc::to_spec)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExpansionSpec { kind, template })
    }
}

/// Parses a document from YAML or JSON text.
pub fn parse_document(text: &str) -> Result<DatabaseDoc, DbError> {
    if text.trim_start().starts_with('{') {
        if let Ok(doc) = serde_json::from_str::<DatabaseDoc>(text) {
            return Ok(doc);
        }
    }
    serde_yaml::from_str(text).map_err(|e| DbError::Parse(e.to_string()))
}
