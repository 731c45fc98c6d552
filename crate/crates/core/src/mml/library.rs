//! Query preprocessing and prompt specialization.
//!
//! Keyword detection maps query content onto accelerator systems and query
//! types; the example library holds query-tool-result patterns tagged the
//! same way, and the agent prompt for a sub-query carries exactly the
//! entries whose tags intersect the detected ones, most specific first.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::text::token_set;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainTag {
    pub system: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_type: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeywordRule {
    pub system: String,
    #[serde(default)]
    pub query_type: Option<String>,
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeywordMap {
    pub rules: Vec<KeywordRule>,
}

impl KeywordMap {
    pub fn load_str(text: &str) -> Result<Self, serde_yaml::Error> {
        serde_yaml::from_str(text)
    }
}

/// Semantic keyword detection: a rule fires when every token of one of its
/// keyword phrases appears in the query (case-insensitive, token-level).
/// No hits fall back to all systems in the map.
pub fn detect_domains(query: &str, keyword_map: &KeywordMap) -> Vec<DomainTag> {
    let tokens = token_set(query);
    let mut tags: Vec<DomainTag> = Vec::new();
    for rule in &keyword_map.rules {
        let hit = rule.keywords.iter().any(|phrase| {
            let phrase_tokens = token_set(phrase);
            !phrase_tokens.is_empty() && phrase_tokens.is_subset(&tokens)
        });
        if hit {
            let tag = DomainTag {
                system: rule.system.clone(),
                query_type: rule.query_type.clone(),
            };
            if !tags.contains(&tag) {
                tags.push(tag);
            }
        }
    }
    if tags.is_empty() {
        for rule in &keyword_map.rules {
            let tag = DomainTag {
                system: rule.system.clone(),
                query_type: None,
            };
            if !tags.contains(&tag) {
                tags.push(tag);
            }
        }
    }
    tags
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TagPair {
    pub system: String,
    #[serde(default)]
    pub query_type: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToolCall {
    pub tool: String,
    #[serde(default)]
    pub args: Value,
}

/// One query-tool-result pattern from the example library.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExampleEntry {
    pub tags: Vec<TagPair>,
    pub query: String,
    pub tool_sequence: Vec<ToolCall>,
    pub answer: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExampleLibrary {
    pub entries: Vec<ExampleEntry>,
}

impl ExampleLibrary {
    pub fn load_str(text: &str) -> Result<Self, serde_yaml::Error> {
        serde_yaml::from_str(text)
    }
}

/// Builds the domain-specialized agent prompt: framing, then exactly the
/// library entries whose tags intersect the detected tags (capped, most
/// specific first, library order stable), then the query. Byte-identical
/// for identical inputs.
pub fn build_agent_prompt(
    subquery: &str,
    library: &ExampleLibrary,
    tags: &[DomainTag],
    cap: usize,
) -> String {
    let mut scored: Vec<(u32, usize, &ExampleEntry)> = Vec::new();
    for (order, entry) in library.entries.iter().enumerate() {
        let score = if tags.is_empty() {
            // Generic example set.
            u32::from(entry.tags.iter().any(|t| t.system == "general"))
        } else {
            entry
                .tags
                .iter()
                .map(|t| {
                    tags.iter()
                        .map(|d| {
                            if t.system != d.system {
                                0
                            } else if t.query_type.is_some() && t.query_type == d.query_type {
                                2
                            } else {
                                1
                            }
                        })
                        .max()
                        .unwrap_or(0)
                })
                .max()
                .unwrap_or(0)
        };
        if score > 0 {
            scored.push((score, order, entry));
        }
    }
    scored.sort_by(|(sa, oa, _), (sb, ob, _)| sb.cmp(sa).then(oa.cmp(ob)));
    scored.truncate(cap);

    let mut prompt = String::from(
        "You navigate a middle-layer accelerator object through its tool suite \
         (list_systems, list_families, list_fields, get_channels, get_indices, \
         describe, count_channels). Work from systems to families to fields, then \
         retrieve channels.\n",
    );
    if !tags.is_empty() {
        prompt.push_str("Detected domains: ");
        let rendered: Vec<String> = tags
            .iter()
            .map(|t| match &t.query_type {
                Some(q) => format!("{} ({q})", t.system),
                None => t.system.clone(),
            })
            .collect();
        prompt.push_str(&rendered.join(", "));
        prompt.push('\n');
    }
    if !scored.is_empty() {
        prompt.push_str("Worked examples:\n");
        for (_, _, entry) in &scored {
            prompt.push_str(&format!("Example query: {}\n", entry.query));
            for call in &entry.tool_sequence {
                prompt.push_str(&format!("  {}({})\n", call.tool, call.args));
            }
            if !entry.answer.is_empty() {
                prompt.push_str(&format!("  answer: {}\n", entry.answer.join(", ")));
            }
        }
    }
    let _ = subquery; // the query rides on the request's own Query: line
    prompt
}
