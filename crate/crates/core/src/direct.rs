//! Paradigm 1: direct in-context lookup.
//!
//! The whole channel dictionary is presented to the selector at once and
//! matching happens on semantics alone: the prompt carries `name` and
//! description but never addresses, which are resolved only after the
//! selection comes back and are validated against the ground truth. The
//! pipeline is tuned for precision over recall and abstains rather than
//! guessing.

use std::collections::BTreeMap;

use serde_json::json;

use crate::config::DirectConfig;
use crate::db::ChannelDatabase;
use crate::selector::{BackendKind, ChoiceOption, ChoiceRequest, Selector};
use crate::text::tokenize;
use crate::types::{FinderError, FinderResult, SubQuery};

const FRAMING: &str = "Find the channels that answer the operator query. \
Match on meaning, not exact wording.";

/// Whole-dictionary semantic lookup.
pub fn find_direct(
    query: &str,
    db: &ChannelDatabase,
    selector: &Selector,
    cfg: &DirectConfig,
) -> Result<FinderResult, FinderError> {
    let mut notes = Vec::new();
    if db.len() > cfg.direct_limit {
        return Err(FinderError::DatabaseTooLarge {
            count: db.len(),
            limit: cfg.direct_limit,
        });
    }
    if db.len() > 1000 {
        notes.push(format!(
            "database has {} records; direct lookup degrades past about 1000",
            db.len()
        ));
    }
    for r in db.records() {
        if r.description.is_empty() {
            return Err(FinderError::EmptyDescription(r.address.clone()));
        }
    }
    // Display names for records lacking an alias, so the dictionary stays
    // `name — description` with addresses withheld.
    let fallback_names = oracle_names(
        &db.records()
            .iter()
            .map(|r| (r.address.clone(), r.description.clone()))
            .collect::<Vec<_>>(),
    );
    let options: Vec<ChoiceOption> = db
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let name = r
                .name
                .clone()
                .unwrap_or_else(|| fallback_names[&r.address].clone());
            ChoiceOption::new(format!("c{i:05}"), name, r.description.clone())
        })
        .collect();

    let subs: Vec<SubQuery> = if cfg.decompose {
        selector.decompose(query)?
    } else {
        vec![SubQuery::new(query)]
    };

    let glossary = if cfg.glossary.is_empty() {
        db.glossary().to_string()
    } else {
        cfg.glossary.clone()
    };
    let framing = if glossary.is_empty() {
        FRAMING.to_string()
    } else {
        format!("{FRAMING}\nFacility terminology: {glossary}")
    };

    let sub_outcomes: Vec<Result<Vec<String>, FinderError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = subs
            .iter()
            .map(|sub| {
                let options = &options;
                let framing = &framing;
                scope.spawn(move || {
                    match_sub_query(sub, options, framing, db, selector, cfg)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut channels: Vec<String> = Vec::new();
    for (sub, outcome) in subs.iter().zip(sub_outcomes) {
        let found = outcome?;
        if found.is_empty() {
            notes.push(format!("no match for sub-query '{sub}'"));
        }
        for address in found {
            if !channels.contains(&address) {
                channels.push(address);
            }
        }
    }
    let (channels, invalid) = db.validate_channels(&channels);
    debug_assert!(invalid.is_empty(), "validated selection left the database");
    Ok(FinderResult {
        abstained: channels.is_empty(),
        channels,
        selector_calls: selector.calls_used(),
        notes,
    })
}

fn match_sub_query(
    sub: &SubQuery,
    options: &[ChoiceOption],
    framing: &str,
    db: &ChannelDatabase,
    selector: &Selector,
    cfg: &DirectConfig,
) -> Result<Vec<String>, FinderError> {
    let mut framing = framing.to_string();
    let mut round = 0;
    loop {
        let req = ChoiceRequest::for_query(&framing, &sub.text, options.to_vec(), true, true);
        let resp = selector.choose(&req)?;
        let candidates: Vec<String> = resp
            .selected
            .iter()
            .filter_map(|id| id[1..].parse::<usize>().ok())
            .map(|i| db.records()[i].address.clone())
            .collect();
        let (valid, invalid) = db.validate_channels(&candidates);
        if invalid.is_empty() || round >= cfg.correction_rounds {
            return Ok(valid);
        }
        round += 1;
        framing.push_str(&format!(
            "\nThese earlier candidates were invalid, select again: {}",
            invalid.join(", ")
        ));
    }
}

/// Automated name generation: upper-camel concatenation of the salient
/// description tokens, unique within the output.
pub fn generate_names(
    records: &[(String, String)],
    selector: &Selector,
) -> Result<BTreeMap<String, String>, FinderError> {
    for (address, description) in records {
        if description.trim().is_empty() {
            return Err(FinderError::EmptyDescription(address.clone()));
        }
    }
    match selector.backend_kind() {
        BackendKind::LexicalOracle => Ok(oracle_names(records)),
        BackendKind::RemoteLlm => llm_names(records, selector),
    }
}

/// Deterministic naming: the four highest-information tokens of each
/// description (rarest across the corpus first), kept in description
/// order, PascalCased, with a numeric suffix on collision.
pub fn oracle_names(records: &[(String, String)]) -> BTreeMap<String, String> {
    let mut doc_freq: BTreeMap<String, usize> = BTreeMap::new();
    let token_lists: Vec<Vec<String>> = records
        .iter()
        .map(|(_, description)| tokenize(description))
        .collect();
    for tokens in &token_lists {
        let mut seen = std::collections::BTreeSet::new();
        for t in tokens {
            if seen.insert(t.clone()) {
                *doc_freq.entry(t.clone()).or_default() += 1;
            }
        }
    }
    let mut used: BTreeMap<String, usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for ((address, _), tokens) in records.iter().zip(&token_lists) {
        let mut distinct: Vec<(usize, &String)> = Vec::new();
        for (pos, t) in tokens.iter().enumerate() {
            if !distinct.iter().any(|(_, d)| *d == t) {
                distinct.push((pos, t));
            }
        }
        // Rarest first, earlier position breaking ties.
        distinct.sort_by_key(|(pos, t)| (doc_freq[*t], *pos));
        let mut picked: Vec<(usize, &String)> = distinct.into_iter().take(4).collect();
        picked.sort_by_key(|(pos, _)| *pos);
        let base: String = picked.iter().map(|(_, t)| pascal(t)).collect();
        let n = used.entry(base.clone()).or_insert(0);
        *n += 1;
        let name = if *n == 1 {
            base
        } else {
            format!("{base}{n}")
        };
        out.insert(address.clone(), name);
    }
    out
}

fn pascal(token: &str) -> String {
    let mut chars = token.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

fn llm_names(
    records: &[(String, String)],
    selector: &Selector,
) -> Result<BTreeMap<String, String>, FinderError> {
    let schema = json!({
        "type": "object",
        "properties": {
            "names": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "index": { "type": "integer" },
                        "name": { "type": "string" }
                    },
                    "required": ["index", "name"],
                    "additionalProperties": false
                }
            }
        },
        "required": ["names"],
        "additionalProperties": false
    });
    let listing: String = records
        .iter()
        .enumerate()
        .map(|(i, (_, d))| format!("{i}: {d}\n"))
        .collect();
    let prompt = format!(
        "Assemble a consistent PascalCase channel name from the salient tokens of \
         each legacy description. Names must be unique.\n\n{listing}"
    );
    let doc = selector.complete_structured(&prompt, &schema)?;
    let fallback = oracle_names(records);
    let mut out = BTreeMap::new();
    if let Some(entries) = doc["names"].as_array() {
        for entry in entries {
            if let (Some(i), Some(name)) = (entry["index"].as_u64(), entry["name"].as_str()) {
                if let Some((address, _)) = records.get(i as usize) {
                    out.insert(address.clone(), name.to_string());
                }
            }
        }
    }
    // Fill gaps and resolve collisions deterministically.
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (address, _) in records {
        let name = out
            .get(address)
            .cloned()
            .unwrap_or_else(|| fallback[address].clone());
        let n = seen.entry(name.clone()).or_insert(0);
        *n += 1;
        let unique = if *n == 1 { name } else { format!("{name}{n}") };
        out.insert(address.clone(), unique);
    }
    Ok(out)
}
