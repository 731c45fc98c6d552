//! Tree of level values with list/range expansion machinery.
//!
//! A database document describes its channels as a tree whose depth `d`
//! nodes carry values for the schema's level `d`. Expansion nodes are
//! generators spliced into their own depth: a range expansion stamps out
//! numbered items (identical units such as power supplies), a list
//! expansion enumerates heterogeneous items (ion and thermal gauges), and
//! both instantiate a shared template subtree under every generated item,
//! multiplying the subtree's channel count Cartesian-style. Generators sit
//! alongside plain siblings, so a device can carry direct leaf channels
//! next to several expanded subdevice groups.

use std::collections::{BTreeMap, BTreeSet};

use super::schema::HierarchySchema;
use super::{ChannelRecord, DbError};

/// Unexpanded tree node, as described by the config document.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    /// Level name; filled from depth when loaded as part of a document.
    pub level: String,
    /// Ignored on expansion nodes (their items carry the values).
    pub value: String,
    pub description: String,
    pub name: Option<String>,
    pub metadata: BTreeMap<String, String>,
    pub body: NodeBody,
}

/// A node has children, or an expansion, or is a leaf; never more than one.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeBody {
    Children(Vec<NodeSpec>),
    Expansion(ExpansionSpec),
    Leaf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionSpec {
    pub kind: ExpansionKind,
    /// Subtree instantiated under every expanded item; empty means the
    /// items themselves are leaves.
    pub template: Vec<NodeSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExpansionKind {
    List { items: Vec<ListItem> },
    Range(RangeSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ListItem {
    pub value: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeSpec {
    pub prefix: String,
    pub lo: i64,
    pub hi: i64,
    pub pad_width: usize,
    /// Item description; `{n}` is replaced by the item number.
    pub description: String,
}

/// Materialized tree node: expansions resolved into concrete siblings.
/// An empty `children` list marks a channel-bearing leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub level: String,
    pub value: String,
    pub description: String,
    pub name: Option<String>,
    pub metadata: BTreeMap<String, String>,
    pub children: Vec<TreeNode>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Child by value, `""` finding the stop-here leaf.
    pub fn child(&self, value: &str) -> Option<&TreeNode> {
        self.children.iter().find(|c| c.value == value)
    }
}

/// Materializes a sibling list at `depth`, splicing expansion generators
/// into concrete nodes. Sibling values must be unique after splicing.
pub fn materialize_list(
    specs: &[NodeSpec],
    schema: &HierarchySchema,
    depth: usize,
) -> Result<Vec<TreeNode>, DbError> {
    let mut out = Vec::new();
    for spec in specs {
        match &spec.body {
            NodeBody::Expansion(exp) => out.extend(expand_generator(exp, schema, depth)?),
            _ => out.push(materialize_node(spec, schema, depth)?),
        }
    }
    check_sibling_values(&out)?;
    Ok(out)
}

fn level_name(schema: &HierarchySchema, depth: usize, what: &str) -> Result<String, DbError> {
    schema
        .levels()
        .get(depth)
        .map(|l| l.name.clone())
        .ok_or_else(|| {
            DbError::Schema(format!(
                "{what} at depth {depth} exceeds schema depth {}",
                schema.depth()
            ))
        })
}

fn materialize_node(
    spec: &NodeSpec,
    schema: &HierarchySchema,
    depth: usize,
) -> Result<TreeNode, DbError> {
    let level = level_name(schema, depth, "node")?;
    if spec.description.is_empty() {
        return Err(DbError::Schema(format!(
            "node '{}' at level '{level}' has no description",
            spec.value
        )));
    }
    let children = match &spec.body {
        NodeBody::Leaf => Vec::new(),
        NodeBody::Children(kids) => materialize_list(kids, schema, depth + 1)?,
        NodeBody::Expansion(_) => unreachable!("generators are spliced by materialize_list"),
    };
    if spec.value.is_empty() && !children.is_empty() {
        return Err(DbError::Schema(format!(
            "stop-here node at level '{level}' must be a leaf"
        )));
    }
    Ok(TreeNode {
        level,
        value: spec.value.clone(),
        description: spec.description.clone(),
        name: spec.name.clone(),
        metadata: spec.metadata.clone(),
        children,
    })
}

fn expand_generator(
    exp: &ExpansionSpec,
    schema: &HierarchySchema,
    depth: usize,
) -> Result<Vec<TreeNode>, DbError> {
    let items: Vec<ListItem> = match &exp.kind {
        ExpansionKind::List { items } => {
            if items.is_empty() {
                return Err(DbError::EmptyList);
            }
            items.clone()
        }
        ExpansionKind::Range(range) => {
            if range.lo > range.hi {
                return Err(DbError::Range {
                    lo: range.lo,
                    hi: range.hi,
                });
            }
            (range.lo..=range.hi)
                .map(|n| ListItem {
                    value: format!("{}{:0width$}", range.prefix, n, width = range.pad_width),
                    description: range.description.replace("{n}", &n.to_string()),
                })
                .collect()
        }
    };
    let level = level_name(schema, depth, "expansion")?;
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        if item.description.is_empty() {
            return Err(DbError::Schema(format!(
                "expanded item '{}' at level '{level}' has no description",
                item.value
            )));
        }
        out.push(TreeNode {
            level: level.clone(),
            value: item.value,
            description: item.description,
            name: None,
            metadata: BTreeMap::new(),
            children: materialize_list(&exp.template, schema, depth + 1)?,
        });
    }
    Ok(out)
}

fn check_sibling_values(nodes: &[TreeNode]) -> Result<(), DbError> {
    let mut seen = BTreeSet::new();
    for n in nodes {
        if !seen.insert(n.value.as_str()) {
            return Err(DbError::Schema(format!(
                "duplicate sibling value '{}' at level '{}'",
                n.value, n.level
            )));
        }
    }
    Ok(())
}

/// Enumerates all channel records at the leaves under `node`.
///
/// `prefix_path` / `prefix_descriptions` carry the ancestry above the node
/// (empty for a root). Records appear in depth-first order; a record's
/// description is the comma-joined description chain from root to leaf, and
/// empty values (stop-here leaves) are dropped from the stored path.
pub fn walk_records(
    node: &TreeNode,
    schema: &HierarchySchema,
    prefix_path: &[(String, String)],
    prefix_descriptions: &[String],
    out: &mut Vec<ChannelRecord>,
) -> Result<(), DbError> {
    let mut path = prefix_path.to_vec();
    if !node.value.is_empty() {
        path.push((node.level.clone(), node.value.clone()));
    }
    let mut descriptions = prefix_descriptions.to_vec();
    descriptions.push(node.description.clone());
    if node.is_leaf() {
        let address = schema.assemble(&path).map_err(|e| match e {
            DbError::MissingLevel(l) => DbError::Schema(format!(
                "leaf '{}' terminates before required level '{l}'",
                node.value
            )),
            other => other,
        })?;
        out.push(ChannelRecord {
            address,
            name: node.name.clone(),
            description: descriptions.join(", "),
            suffix_role: schema.suffix_role_of(&path),
            path,
            metadata: node.metadata.clone(),
        });
        return Ok(());
    }
    for child in &node.children {
        walk_records(child, schema, &path, &descriptions, out)?;
    }
    Ok(())
}

/// Returns all leaf records under a node spec: the `expand` operation.
/// The record count obeys the product law: for every root-to-leaf route,
/// expansion cardinalities along the route multiply.
pub fn expand(
    node: &NodeSpec,
    schema: &HierarchySchema,
    prefix_path: &[(String, String)],
) -> Result<Vec<ChannelRecord>, DbError> {
    let nodes = materialize_list(std::slice::from_ref(node), schema, prefix_path.len())?;
    let mut out = Vec::new();
    for tree in &nodes {
        walk_records(tree, schema, prefix_path, &[], &mut out)?;
    }
    Ok(out)
}
