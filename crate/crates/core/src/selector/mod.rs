//! The decision boundary between pipelines and intelligence.
//!
//! Pipelines never talk to a model directly; they submit constrained
//! choice requests, decomposition requests, or structured completions to a
//! [`Selector`], which enforces the contract regardless of backend
//! behavior: selections stay inside the presented option set, budgets are
//! respected, and schema violations are retried once then rejected.
//!
//! Two interchangeable backends exist: [`oracle::LexicalOracle`], a fully
//! deterministic token-overlap scorer for offline runs and testing, and
//! [`remote::RemoteLlm`], speaking the chat-completion wire protocol.

pub mod oracle;
pub mod remote;
pub mod schema;

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::types::SubQuery;

pub use crate::text::lexical_score;

#[derive(Debug, Error)]
pub enum SelectorError {
    #[error("selector call budget exhausted ({limit} calls)")]
    BudgetExhausted { limit: u32 },
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("selection still invalid after one retry")]
    InvalidAfterRetry,
    #[error("invalid choice request: {0}")]
    InvalidRequest(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication error: {0}")]
    Auth(String),
    #[error("response violated schema after retry: {0}")]
    SchemaViolationAfterRetry(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    RemoteLlm,
    LexicalOracle,
}

/// One selectable option.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceOption {
    pub id: String,
    pub label: String,
    pub description: String,
}

impl ChoiceOption {
    pub fn new(
        id: impl Into<String>,
        label: impl Into<String>,
        description: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            description: description.into(),
        }
    }
}

/// A constrained-selection request: task framing plus an enumerated,
/// dynamically constructed option set.
#[derive(Debug, Clone)]
pub struct ChoiceRequest {
    /// Task framing and facility glossary; the operative query sits on the
    /// final `Query:` line (see [`ChoiceRequest::for_query`]).
    pub context: String,
    pub options: Vec<ChoiceOption>,
    pub multi_select: bool,
    pub allow_abstain: bool,
}

impl ChoiceRequest {
    pub fn for_query(
        framing: &str,
        query: &str,
        options: Vec<ChoiceOption>,
        multi_select: bool,
        allow_abstain: bool,
    ) -> Self {
        let context = if framing.is_empty() {
            format!("Query: {query}")
        } else {
            format!("{framing}\nQuery: {query}")
        };
        Self {
            context,
            options,
            multi_select,
            allow_abstain,
        }
    }

    /// The operative query: text after the last `Query:` marker, or the
    /// whole context when no marker is present.
    pub fn query(&self) -> &str {
        match self.context.rfind("Query:") {
            Some(pos) => self.context[pos + "Query:".len()..].trim(),
            None => self.context.trim(),
        }
    }

    fn validate(&self) -> Result<(), SelectorError> {
        if self.options.is_empty() {
            return Err(SelectorError::InvalidRequest("no options".into()));
        }
        let mut seen = BTreeSet::new();
        for opt in &self.options {
            if !seen.insert(opt.id.as_str()) {
                return Err(SelectorError::InvalidRequest(format!(
                    "duplicate option id '{}'",
                    opt.id
                )));
            }
        }
        Ok(())
    }
}

/// Validated selection outcome. `selected` is always a subset of the
/// presented option ids; abstention implies an empty selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceResponse {
    pub selected: Vec<String>,
    pub abstained: bool,
    pub rationale: Option<String>,
}

/// Unvalidated backend output, sanitized by the boundary.
#[derive(Debug, Clone)]
pub struct RawChoice {
    pub selected: Vec<String>,
    pub abstained: bool,
    pub rationale: Option<String>,
}

/// Behavioral contract every backend implements. Backends must tolerate
/// concurrent calls; all methods are `&self`.
pub trait DecisionBackend: Send + Sync {
    fn kind(&self) -> BackendKind;
    /// `attempt` > 0 marks a retry after an invalid selection.
    fn choose(&self, req: &ChoiceRequest, attempt: u32) -> Result<RawChoice, SelectorError>;
    fn decompose(&self, query: &str) -> Result<Vec<String>, SelectorError>;
    /// Completion constrained to a closed-object JSON schema. The backend
    /// retries a non-validating response once before giving up.
    fn complete_structured(
        &self,
        prompt: &str,
        response_schema: &serde_json::Value,
    ) -> Result<serde_json::Value, SelectorError>;
}

/// The boundary: wraps a backend with a per-evaluation call budget and
/// invariant enforcement. Create one per query evaluation.
pub struct Selector {
    backend: Arc<dyn DecisionBackend>,
    limit: u32,
    used: AtomicU32,
}

impl Selector {
    pub fn new(backend: Arc<dyn DecisionBackend>, call_budget: u32) -> Self {
        Self {
            backend,
            limit: call_budget,
            used: AtomicU32::new(0),
        }
    }

    pub fn backend_kind(&self) -> BackendKind {
        self.backend.kind()
    }

    pub fn calls_used(&self) -> u32 {
        self.used.load(Ordering::SeqCst)
    }

    pub fn call_budget(&self) -> u32 {
        self.limit
    }

    fn charge(&self) -> Result<(), SelectorError> {
        let limit = self.limit;
        self.used
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |used| {
                (used < limit).then_some(used + 1)
            })
            .map(|_| ())
            .map_err(|_| SelectorError::BudgetExhausted { limit })
    }

    /// Constrained selection. Out-of-set ids coming back from the backend
    /// are stripped; if stripping (or a disallowed abstention) empties a
    /// mandatory selection, the call is retried once and then fails with
    /// [`SelectorError::InvalidAfterRetry`].
    pub fn choose(&self, req: &ChoiceRequest) -> Result<ChoiceResponse, SelectorError> {
        req.validate()?;
        self.charge()?;
        let raw = self.backend.choose(req, 0)?;
        match self.sanitize(req, raw) {
            Some(resp) => Ok(resp),
            None => {
                self.charge()?;
                let raw = self.backend.choose(req, 1)?;
                self.sanitize(req, raw)
                    .ok_or(SelectorError::InvalidAfterRetry)
            }
        }
    }

    /// Returns `None` when the outcome is invalid and must be retried.
    fn sanitize(&self, req: &ChoiceRequest, raw: RawChoice) -> Option<ChoiceResponse> {
        let ids: BTreeSet<&str> = req.options.iter().map(|o| o.id.as_str()).collect();
        let mut selected: Vec<String> = Vec::new();
        for id in raw.selected {
            if ids.contains(id.as_str()) && !selected.contains(&id) {
                selected.push(id);
            }
        }
        if !req.multi_select {
            selected.truncate(1);
        }
        if raw.abstained && !req.allow_abstain {
            return None;
        }
        if selected.is_empty() && !req.allow_abstain {
            return None;
        }
        let abstained = selected.is_empty();
        Some(ChoiceResponse {
            selected,
            abstained,
            rationale: raw.rationale,
        })
    }

    /// Splits a query into atomic sub-queries. Single-target queries come
    /// back unchanged; the result is never empty.
    pub fn decompose(&self, query: &str) -> Result<Vec<SubQuery>, SelectorError> {
        let query = query.trim();
        if query.is_empty() {
            return Err(SelectorError::InvalidRequest("empty query".into()));
        }
        self.charge()?;
        let mut parts = self.backend.decompose(query)?;
        parts.retain(|p| !p.trim().is_empty());
        if parts.is_empty() {
            parts.push(query.to_string());
        }
        Ok(parts.into_iter().map(SubQuery::new).collect())
    }

    /// Schema-constrained completion. The returned document is verified
    /// against `response_schema` at the boundary even though conforming
    /// backends validate internally.
    pub fn complete_structured(
        &self,
        prompt: &str,
        response_schema: &serde_json::Value,
    ) -> Result<serde_json::Value, SelectorError> {
        self.charge()?;
        let doc = self.backend.complete_structured(prompt, response_schema)?;
        schema::validate(response_schema, &doc)
            .map_err(SelectorError::SchemaViolationAfterRetry)?;
        Ok(doc)
    }
}
