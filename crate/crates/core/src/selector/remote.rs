//! Remote LLM backend speaking the chat-completion wire protocol.
//!
//! Requests are HTTP POSTs with a JSON body carrying `model`, `messages`,
//! and `response_format` in JSON-schema mode; the endpoint URL and API key
//! come from `CHANFIND_LLM_URL` / `CHANFIND_LLM_KEY`. The transport is a
//! trait so recorded exchanges replay through the full parsing and
//! validation path without a network.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{schema, BackendKind, ChoiceRequest, DecisionBackend, RawChoice, SelectorError};

pub const ENV_URL: &str = "CHANFIND_LLM_URL";
pub const ENV_KEY: &str = "CHANFIND_LLM_KEY";

#[derive(Debug, Clone, Serialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: "system".into(),
            content: content.into(),
        }
    }
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

/// One chat-completion request in wire form.
#[derive(Debug, Clone, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub response_format: Value,
}

impl ChatRequest {
    pub fn new(model: &str, messages: Vec<ChatMessage>, response_schema: &Value) -> Self {
        Self {
            model: model.to_string(),
            messages,
            response_format: json!({
                "type": "json_schema",
                "json_schema": {
                    "name": "selection",
                    "strict": true,
                    "schema": response_schema,
                }
            }),
        }
    }
}

/// Transport delivering a chat request and returning the raw response body.
/// Implementations: HTTP for live endpoints, scripted bodies for fixtures.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, SelectorError>;
}

/// Wire shape of a chat-completion response body.
#[derive(Debug, Deserialize)]
struct CompletionBody {
    choices: Vec<CompletionChoice>,
}

#[derive(Debug, Deserialize)]
struct CompletionChoice {
    message: CompletionMessage,
}

#[derive(Debug, Deserialize)]
struct CompletionMessage {
    content: String,
}

/// Extracts the first choice's message content from a response body.
pub fn parse_completion_body(body: &str) -> Result<String, SelectorError> {
    let parsed: CompletionBody = serde_json::from_str(body)
        .map_err(|e| SelectorError::Transport(format!("malformed completion body: {e}")))?;
    parsed
        .choices
        .into_iter()
        .next()
        .map(|c| c.message.content)
        .ok_or_else(|| SelectorError::Transport("completion body has no choices".into()))
}

/// HTTP transport for OpenAI-compatible chat-completion endpoints.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    url: String,
    key: String,
}

impl HttpTransport {
    pub fn new(url: impl Into<String>, key: impl Into<String>) -> Self {
        Self {
            client: reqwest::blocking::Client::new(),
            url: url.into(),
            key: key.into(),
        }
    }

    /// Reads endpoint configuration from the environment.
    pub fn from_env() -> Result<Self, SelectorError> {
        let url = std::env::var(ENV_URL)
            .map_err(|_| SelectorError::BackendUnavailable(format!("{ENV_URL} not set")))?;
        let key = std::env::var(ENV_KEY).unwrap_or_default();
        Ok(Self::new(url, key))
    }
}

impl ChatTransport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, SelectorError> {
        let resp = self
            .client
            .post(&self.url)
            .bearer_auth(&self.key)
            .json(request)
            .send()
            .map_err(|e| SelectorError::Transport(e.to_string()))?;
        let status = resp.status();
        let body = resp
            .text()
            .map_err(|e| SelectorError::Transport(e.to_string()))?;
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(SelectorError::Auth(format!("endpoint returned {status}")));
        }
        if !status.is_success() {
            return Err(SelectorError::Transport(format!(
                "endpoint returned {status}: {body}"
            )));
        }
        Ok(body)
    }
}

/// Chat-completion backend: builds constrained prompts, parses structured
/// replies, and retries one round on schema violations.
pub struct RemoteLlm {
    transport: Box<dyn ChatTransport>,
    model: String,
}

impl RemoteLlm {
    pub fn new(transport: Box<dyn ChatTransport>, model: impl Into<String>) -> Self {
        Self {
            transport,
            model: model.into(),
        }
    }

    pub fn from_env(model: impl Into<String>) -> Result<Self, SelectorError> {
        Ok(Self::new(Box::new(HttpTransport::from_env()?), model))
    }

    /// One schema-validated completion round trip with a single retry.
    fn structured(
        &self,
        mut messages: Vec<ChatMessage>,
        response_schema: &Value,
    ) -> Result<Value, SelectorError> {
        let mut last_err = String::new();
        for attempt in 0..2 {
            if attempt > 0 {
                messages.push(ChatMessage::user(format!(
                    "The previous reply did not match the required schema ({last_err}). \
                     Reply again with JSON that validates."
                )));
            }
            let request = ChatRequest::new(&self.model, messages.clone(), response_schema);
            let body = self.transport.complete(&request)?;
            let content = parse_completion_body(&body)?;
            match serde_json::from_str::<Value>(&content) {
                Ok(doc) => match schema::validate(response_schema, &doc) {
                    Ok(()) => return Ok(doc),
                    Err(e) => last_err = e,
                },
                Err(e) => last_err = format!("content is not JSON: {e}"),
            }
        }
        Err(SelectorError::SchemaViolationAfterRetry(last_err))
    }
}

fn choice_schema(req: &ChoiceRequest) -> Value {
    let ids: Vec<&str> = req.options.iter().map(|o| o.id.as_str()).collect();
    json!({
        "type": "object",
        "properties": {
            "selected": { "type": "array", "items": { "type": "string", "enum": ids } },
            "abstain": { "type": "boolean" },
            "rationale": { "type": "string" }
        },
        "required": ["selected", "abstain"],
        "additionalProperties": false
    })
}

fn render_choice_prompt(req: &ChoiceRequest, attempt: u32) -> Vec<ChatMessage> {
    let mut lines = String::new();
    for opt in &req.options {
        lines.push_str(&format!("{}) {} — {}\n", opt.id, opt.label, opt.description));
    }
    let cardinality = if req.multi_select {
        "Select every option that matches."
    } else {
        "Select at most one option."
    };
    let abstain = if req.allow_abstain {
        "If nothing matches, abstain instead of guessing."
    } else {
        "You must select from the list."
    };
    let mut messages = vec![
        ChatMessage::system(
            "You select control-system options. Reply with JSON only, \
             using ids exactly as listed.",
        ),
        ChatMessage::user(format!(
            "{}\n\nOptions:\n{lines}\n{cardinality} {abstain}",
            req.context
        )),
    ];
    if attempt > 0 {
        messages.push(ChatMessage::user(
            "Your previous selection contained ids that are not in the option list. \
             Choose only from the listed ids."
                .to_string(),
        ));
    }
    messages
}

impl DecisionBackend for RemoteLlm {
    fn kind(&self) -> BackendKind {
        BackendKind::RemoteLlm
    }

    fn choose(&self, req: &ChoiceRequest, attempt: u32) -> Result<RawChoice, SelectorError> {
        let doc = self.structured(render_choice_prompt(req, attempt), &choice_schema(req))?;
        Ok(RawChoice {
            selected: doc["selected"]
                .as_array()
                .map(|a| {
                    a.iter()
                        .filter_map(Value::as_str)
                        .map(str::to_string)
                        .collect()
                })
                .unwrap_or_default(),
            abstained: doc["abstain"].as_bool().unwrap_or(false),
            rationale: doc["rationale"].as_str().map(str::to_string),
        })
    }

    fn decompose(&self, query: &str) -> Result<Vec<String>, SelectorError> {
        let schema = json!({
            "type": "object",
            "properties": {
                "sub_queries": { "type": "array", "items": { "type": "string" } }
            },
            "required": ["sub_queries"],
            "additionalProperties": false
        });
        let messages = vec![
            ChatMessage::system(
                "Split operator queries into atomic sub-queries, one per requested \
                 target. A single-target query stays as one entry.",
            ),
            ChatMessage::user(format!("Query: {query}")),
        ];
        let doc = self.structured(messages, &schema)?;
        Ok(doc["sub_queries"]
            .as_array()
            .map(|a| {
                a.iter()
                    .filter_map(Value::as_str)
                    .map(str::to_string)
                    .collect()
            })
            .unwrap_or_default())
    }

    fn complete_structured(
        &self,
        prompt: &str,
        response_schema: &Value,
    ) -> Result<Value, SelectorError> {
        self.structured(vec![ChatMessage::user(prompt.to_string())], response_schema)
    }
}
