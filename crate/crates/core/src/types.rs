//! Types shared across the finder pipelines.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::db::DbError;
use crate::selector::SelectorError;

#[derive(Debug, Error)]
pub enum FinderError {
    #[error("database too large for direct lookup ({count} records > {limit}); use the tree or explore paradigms")]
    DatabaseTooLarge { count: usize, limit: usize },
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error(transparent)]
    Db(#[from] DbError),
    #[error("navigation dead end at level '{0}'")]
    DeadEnd(String),
    #[error("iteration limit exceeded after {0} steps")]
    IterationLimitExceeded(usize),
    #[error("at least a property hint is required")]
    EmptyHints,
    #[error("unknown component '{0}' in filters")]
    UnknownComponent(String),
    #[error("filters may reference already-fixed higher components only: {0}")]
    InvalidFilter(String),
    #[error("unknown tool '{0}'")]
    UnknownTool(String),
    #[error("unknown system '{0}'")]
    UnknownSystem(String),
    #[error("unknown family '{0}'")]
    UnknownFamily(String),
    #[error("unknown field '{0}'")]
    UnknownField(String),
    #[error("empty description for address {0}")]
    EmptyDescription(String),
    #[error("{0}")]
    Config(String),
}

/// One atomic sub-query produced by query decomposition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubQuery {
    pub text: String,
}

impl SubQuery {
    pub fn new(text: impl Into<String>) -> Self {
        Self { text: text.into() }
    }
}

impl std::fmt::Display for SubQuery {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.text)
    }
}

/// Outcome of one finder evaluation.
///
/// `channels` contains only addresses that exist in the ground-truth
/// database; pipelines validate before returning. `abstained` is set when
/// the pipeline preferred returning nothing over guessing.
#[derive(Debug, Clone, Serialize)]
pub struct FinderResult {
    pub channels: Vec<String>,
    pub abstained: bool,
    pub selector_calls: u32,
    /// Human-readable notes (per-sub-query outcomes, abstention reasons).
    pub notes: Vec<String>,
}

impl FinderResult {
    pub fn abstention(selector_calls: u32, note: impl Into<String>) -> Self {
        Self {
            channels: Vec::new(),
            abstained: true,
            selector_calls,
            notes: vec![note.into()],
        }
    }
}
