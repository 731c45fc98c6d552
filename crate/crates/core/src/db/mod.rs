//! Channel database: loading, expansion, indexing, assembly, validation.
//!
//! Databases are immutable after load and safe to share across concurrent
//! query evaluations. Loading is deterministic: the same document always
//! produces the same records in the same depth-first, document order.

mod doc;
pub mod generate;
mod schema;
mod tree;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

pub use doc::{parse_document, DatabaseDoc, ExpandDoc, LevelDoc, ListItemDoc, NodeDoc, RangeDoc, SchemaDoc};
pub use schema::{HierarchySchema, LevelDef, SuffixRole};
pub use tree::{
    expand, materialize_list, ExpansionKind, ExpansionSpec, ListItem, NodeBody, NodeSpec,
    RangeSpec, TreeNode,
};

#[derive(Debug, Error)]
pub enum DbError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("duplicate address after expansion: {0}")]
    DuplicateAddress(String),
    #[error("invalid range expansion: lo {lo} > hi {hi}")]
    Range { lo: i64, hi: i64 },
    #[error("list expansion requires at least one item")]
    EmptyList,
    #[error("required level '{0}' absent from path")]
    MissingLevel(String),
    #[error("unknown level '{0}' in path")]
    UnknownLevel(String),
    #[error("unknown path prefix: {0}")]
    UnknownPrefix(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One addressable control-system signal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelRecord {
    pub address: String,
    /// Human-readable alias (the second dictionary layer).
    pub name: Option<String>,
    pub description: String,
    /// Ordered (level, value) pairs; assembling them through the owning
    /// schema reproduces `address` exactly. Empty for flat records.
    pub path: Vec<(String, String)>,
    pub suffix_role: SuffixRole,
    pub metadata: BTreeMap<String, String>,
}

impl ChannelRecord {
    /// Value of a path level, if present.
    pub fn level_value(&self, level: &str) -> Option<&str> {
        self.path
            .iter()
            .find(|(l, _)| l == level)
            .map(|(_, v)| v.as_str())
    }
}

/// Immutable, indexed channel database.
#[derive(Debug)]
pub struct ChannelDatabase {
    schema: HierarchySchema,
    tree: Vec<TreeNode>,
    records: Vec<ChannelRecord>,
    glossary: String,
    by_address: HashMap<String, usize>,
    by_level: HashMap<(String, String), Vec<usize>>,
    vocab: Vec<BTreeSet<String>>,
}

impl ChannelDatabase {
    /// Loads a database from YAML or JSON text, materializing all
    /// expansions and building the indexes.
    pub fn load_str(document: &str) -> Result<Self, DbError> {
        Self::from_doc(&parse_document(document)?)
    }

    pub fn load_path(path: impl AsRef<Path>) -> Result<Self, DbError> {
        let text = std::fs::read_to_string(path)?;
        Self::load_str(&text)
    }

    pub fn from_doc(doc: &DatabaseDoc) -> Result<Self, DbError> {
        let schema = HierarchySchema::new(
            &doc.schema.pattern,
            doc.schema
                .levels
                .iter()
                .map(|l| (l.name.clone(), l.optional))
                .collect(),
            doc.suffixes.clone(),
        )?;
        let specs = doc
            .tree
            .iter()
            .map(NodeDoc::to_spec)
            .collect::<Result<Vec<_>, _>>()?;
        let roots = tree::materialize_list(&specs, &schema, 0)?;
        let mut records = Vec::new();
        for root in &roots {
            tree::walk_records(root, &schema, &[], &[], &mut records)?;
        }
        Self::index(schema, roots, records, doc.glossary.clone())
    }

    /// Builds a database from pre-assembled flat records (no tree). Used
    /// for views whose raw addresses do not follow a naming pattern, such
    /// as middle-layer companions.
    pub fn from_flat_records(records: Vec<ChannelRecord>) -> Result<Self, DbError> {
        let schema = HierarchySchema::new(
            "{0}",
            vec![("address".to_string(), false)],
            BTreeMap::new(),
        )?;
        Self::index(schema, Vec::new(), records, String::new())
    }

    fn index(
        schema: HierarchySchema,
        tree: Vec<TreeNode>,
        records: Vec<ChannelRecord>,
        glossary: String,
    ) -> Result<Self, DbError> {
        let mut by_address = HashMap::with_capacity(records.len());
        let mut by_level: HashMap<(String, String), Vec<usize>> = HashMap::new();
        let mut vocab: Vec<BTreeSet<String>> = vec![BTreeSet::new(); schema.depth()];
        for (idx, record) in records.iter().enumerate() {
            if by_address.insert(record.address.clone(), idx).is_some() {
                return Err(DbError::DuplicateAddress(record.address.clone()));
            }
            for (level, value) in &record.path {
                by_level
                    .entry((level.clone(), value.clone()))
                    .or_default()
                    .push(idx);
                if let Some(def) = schema.level_named(level) {
                    vocab[def.ordinal].insert(value.clone());
                }
            }
        }
        Ok(Self {
            schema,
            tree,
            records,
            glossary,
            by_address,
            by_level,
            vocab,
        })
    }

    pub fn schema(&self) -> &HierarchySchema {
        &self.schema
    }

    /// Materialized value tree (empty for flat databases).
    pub fn tree(&self) -> &[TreeNode] {
        &self.tree
    }

    pub fn records(&self) -> &[ChannelRecord] {
        &self.records
    }

    pub fn glossary(&self) -> &str {
        &self.glossary
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, address: &str) -> Option<&ChannelRecord> {
        self.by_address.get(address).map(|&i| &self.records[i])
    }

    pub fn contains(&self, address: &str) -> bool {
        self.by_address.contains_key(address)
    }

    /// Records carrying `value` at `level`, in document order.
    pub fn records_at(&self, level: &str, value: &str) -> Vec<&ChannelRecord> {
        self.by_level
            .get(&(level.to_string(), value.to_string()))
            .map(|ids| ids.iter().map(|&i| &self.records[i]).collect())
            .unwrap_or_default()
    }

    /// Partitions candidates by database membership, preserving order.
    /// Invalid membership is data, not an error.
    pub fn validate_channels(&self, candidates: &[String]) -> (Vec<String>, Vec<String>) {
        let mut valid = Vec::new();
        let mut invalid = Vec::new();
        for c in candidates {
            if self.contains(c) {
                valid.push(c.clone());
            } else {
                invalid.push(c.clone());
            }
        }
        (valid, invalid)
    }

    /// Parses an address back into a path, guided by the database's
    /// per-level value vocabulary.
    pub fn parse_address(&self, address: &str) -> Option<Vec<(String, String)>> {
        self.schema.parse_with_vocab(address, &self.vocab)
    }

    /// Tree node at a value path, e.g. `["VAC", "SEC01"]`.
    pub fn node_at(&self, values: &[&str]) -> Option<&TreeNode> {
        let (first, rest) = values.split_first()?;
        let mut node = self.tree.iter().find(|n| n.value == *first)?;
        for value in rest {
            node = node.child(value)?;
        }
        Some(node)
    }

    /// Number of records whose path starts with the given value prefix.
    pub fn count_under(&self, values: &[&str]) -> usize {
        self.records
            .iter()
            .filter(|r| {
                values.len() <= r.path.len()
                    && values
                        .iter()
                        .zip(&r.path)
                        .all(|(want, (_, have))| want == have)
            })
            .count()
    }

    /// Writes the flat interchange list: `address TAB name TAB description`,
    /// one record per line.
    pub fn export_flat(&self, w: &mut impl Write) -> std::io::Result<()> {
        for r in &self.records {
            writeln!(
                w,
                "{}\t{}\t{}",
                r.address,
                r.name.as_deref().unwrap_or(""),
                r.description
            )?;
        }
        Ok(())
    }
}

/// Summary of one level of a database subtree, used by inspection.
#[derive(Debug, Clone, Serialize)]
pub struct SubtreeSummary {
    pub value: String,
    pub level: String,
    pub description: String,
    pub channel_count: usize,
}

impl ChannelDatabase {
    /// Child summaries under a value prefix (root children for an empty
    /// prefix), with per-child channel counts.
    pub fn summarize_children(&self, prefix: &[&str]) -> Result<Vec<SubtreeSummary>, DbError> {
        let children: &[TreeNode] = if prefix.is_empty() {
            &self.tree
        } else {
            let node = self
                .node_at(prefix)
                .ok_or_else(|| DbError::UnknownPrefix(prefix.join("/")))?;
            &node.children
        };
        Ok(children
            .iter()
            .map(|c| {
                let mut values: Vec<&str> = prefix.to_vec();
                if !c.value.is_empty() {
                    values.push(&c.value);
                }
                SubtreeSummary {
                    value: c.value.clone(),
                    level: c.level.clone(),
                    description: c.description.clone(),
                    channel_count: if c.value.is_empty() {
                        1
                    } else {
                        self.count_under(&values)
                    },
                }
            })
            .collect())
    }
}
