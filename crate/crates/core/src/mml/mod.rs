//! Paradigm 3c: navigation over a middle-layer abstraction.
//!
//! A middle-layer tree organizes heterogeneous raw process variables into
//! a consistent structure of systems, device families, and fields, each
//! field holding the concrete channel addresses by device index. Agents
//! navigate exclusively through a fixed seven-tool suite; queries are
//! preprocessed with keyword-driven domain detection and each sub-query
//! gets a domain-specialized prompt assembled from an example library.

mod library;
mod tools;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use library::{
    build_agent_prompt, detect_domains, DomainTag, ExampleEntry, ExampleLibrary, KeywordMap,
    KeywordRule, TagPair, ToolCall,
};
pub use tools::{execute_mml_tool, MML_TOOLSET};

use crate::config::MmlConfig;
use crate::db::{ChannelDatabase, ChannelRecord, SuffixRole};
use crate::explorer::AgentStep;
use crate::selector::{ChoiceOption, ChoiceRequest, Selector};
use crate::text::tokenize;
use crate::types::{FinderError, FinderResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MmlTree {
    pub systems: Vec<MmlSystem>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MmlSystem {
    pub name: String,
    pub description: String,
    pub families: Vec<MmlFamily>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MmlFamily {
    pub name: String,
    pub description: String,
    pub fields: Vec<MmlField>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MmlField {
    pub name: String,
    pub description: String,
    pub channels: Vec<MmlChannel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MmlChannel {
    pub address: String,
    pub device_index: u32,
}

impl MmlTree {
    pub fn load_str(text: &str) -> Result<Self, FinderError> {
        let tree: MmlTree = serde_yaml::from_str(text)
            .map_err(|e| FinderError::Config(format!("middle-layer tree: {e}")))?;
        tree.check_unique_names()?;
        Ok(tree)
    }

    pub fn load_path(path: impl AsRef<std::path::Path>) -> Result<Self, FinderError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FinderError::Config(format!("middle-layer tree: {e}")))?;
        Self::load_str(&text)
    }

    fn check_unique_names(&self) -> Result<(), FinderError> {
        let mut sys_names = BTreeSet::new();
        for sys in &self.systems {
            if !sys_names.insert(&sys.name) {
                return Err(FinderError::Config(format!(
                    "duplicate system '{}'",
                    sys.name
                )));
            }
            let mut fam_names = BTreeSet::new();
            for fam in &sys.families {
                if !fam_names.insert(&fam.name) {
                    return Err(FinderError::Config(format!(
                        "duplicate family '{}' in system '{}'",
                        fam.name, sys.name
                    )));
                }
                let mut field_names = BTreeSet::new();
                for field in &fam.fields {
                    if !field_names.insert(&field.name) {
                        return Err(FinderError::Config(format!(
                            "duplicate field '{}' in family '{}'",
                            field.name, fam.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn system(&self, name: &str) -> Result<&MmlSystem, FinderError> {
        self.systems
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| FinderError::UnknownSystem(name.to_string()))
    }

    /// All channel addresses in the tree.
    pub fn addresses(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for sys in &self.systems {
            for fam in &sys.families {
                for field in &fam.fields {
                    for ch in &field.channels {
                        out.insert(ch.address.as_str());
                    }
                }
            }
        }
        out
    }

    pub fn channel_count(&self) -> usize {
        self.systems
            .iter()
            .flat_map(|s| &s.families)
            .flat_map(|f| &f.fields)
            .map(|f| f.channels.len())
            .sum()
    }

    /// Checks that every channel address exists in the companion database.
    pub fn validate_against(&self, db: &ChannelDatabase) -> Result<(), FinderError> {
        for address in self.addresses() {
            if !db.contains(address) {
                return Err(FinderError::Config(format!(
                    "tree channel {address} missing from companion database"
                )));
            }
        }
        Ok(())
    }

    /// Builds the companion flat database from the tree itself: raw legacy
    /// addresses with no naming pattern, descriptions chained from the
    /// tree levels.
    pub fn companion_database(&self) -> Result<ChannelDatabase, FinderError> {
        let mut records = Vec::new();
        for sys in &self.systems {
            for fam in &sys.families {
                for field in &fam.fields {
                    for ch in &field.channels {
                        records.push(ChannelRecord {
                            address: ch.address.clone(),
                            name: None,
                            description: format!(
                                "{}, {}, {}, device {}",
                                sys.description, fam.description, field.description, ch.device_index
                            ),
                            path: Vec::new(),
                            suffix_role: SuffixRole::None,
                            metadata: Default::default(),
                        });
                    }
                }
            }
        }
        Ok(ChannelDatabase::from_flat_records(records)?)
    }
}

/// Trace of one domain-specialized agent run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MmlAgentTrace {
    pub sub_query: String,
    pub tags: Vec<DomainTag>,
    pub prompt: String,
    pub steps: Vec<AgentStep>,
    pub channels: Vec<String>,
}

struct MmlAgent<'a> {
    tree: &'a MmlTree,
    selector: &'a Selector,
    cfg: &'a MmlConfig,
    prompt: &'a str,
    steps: Vec<AgentStep>,
    iterations: usize,
}

impl MmlAgent<'_> {
    fn act(&mut self, thought: &str, tool: &str, args: Value) -> Result<Value, FinderError> {
        self.iterations += 1;
        if self.iterations > self.cfg.max_iterations {
            return Err(FinderError::IterationLimitExceeded(self.iterations));
        }
        let obs = execute_mml_tool(self.tree, tool, &args)?;
        self.steps.push(AgentStep {
            thought: thought.to_string(),
            tool: tool.to_string(),
            args,
            observation: obs.to_string(),
        });
        Ok(obs)
    }

    fn choose(
        &mut self,
        options: Vec<ChoiceOption>,
        query: &str,
        multi: bool,
    ) -> Result<Vec<String>, FinderError> {
        if options.len() == 1 {
            return Ok(vec![options[0].id.clone()]);
        }
        self.iterations += 1;
        if self.iterations > self.cfg.max_iterations {
            return Err(FinderError::IterationLimitExceeded(self.iterations));
        }
        let req = ChoiceRequest::for_query(self.prompt, query, options, multi, true);
        Ok(self.selector.choose(&req)?.selected)
    }

    fn run(&mut self, query: &str, tags: &[DomainTag]) -> Result<Vec<String>, FinderError> {
        let obs = self.act(
            "List the accelerator systems to anchor navigation.",
            "list_systems",
            json!({}),
        )?;
        let mut system_options: Vec<ChoiceOption> = value_pairs(&obs)
            .into_iter()
            .map(|(name, description)| ChoiceOption::new(&name, &name, description))
            .collect();
        // Domain detection narrows the system choice when it found tags.
        let detected: BTreeSet<&str> = tags.iter().map(|t| t.system.as_str()).collect();
        if !detected.is_empty() {
            let narrowed: Vec<ChoiceOption> = system_options
                .iter()
                .filter(|o| detected.contains(o.id.as_str()))
                .cloned()
                .collect();
            if !narrowed.is_empty() {
                system_options = narrowed;
            }
        }
        let Some(system) = self.choose(system_options, query, false)?.into_iter().next() else {
            return Ok(Vec::new());
        };

        let obs = self.act(
            "Enumerate device families within the selected system.",
            "list_families",
            json!({ "system": system }),
        )?;
        let family_options: Vec<ChoiceOption> = value_pairs(&obs)
            .into_iter()
            .map(|(name, description)| ChoiceOption::new(&name, &name, description))
            .collect();
        let families = self.choose(family_options, query, true)?;
        if families.is_empty() {
            return Ok(Vec::new());
        }

        let mut channels = Vec::new();
        for family in families.iter().take(4) {
            let obs = self.act(
                "Inspect the fields available for this device family.",
                "list_fields",
                json!({ "system": system, "family": family }),
            )?;
            let field_options: Vec<ChoiceOption> = value_pairs(&obs)
                .into_iter()
                .map(|(name, description)| ChoiceOption::new(&name, &name, description))
                .collect();
            let Some(field) = self.choose(field_options, query, false)?.into_iter().next()
            else {
                continue;
            };
            // A device index named in the query narrows the channel list.
            let filter = self.device_filter(query, &system, family)?;
            let mut args = json!({ "system": system, "family": family, "field": field });
            if let Some(f) = &filter {
                args["filter"] = json!(f);
            }
            let obs = self.act(
                "Retrieve the channel names for the chosen family and field.",
                "get_channels",
                args,
            )?;
            if let Some(list) = obs.as_array() {
                for ch in list {
                    if let Some(a) = ch["address"].as_str() {
                        if !channels.contains(&a.to_string()) {
                            channels.push(a.to_string());
                        }
                    }
                }
            }
        }
        Ok(channels)
    }

    /// When the query names a device index present in the family, filter
    /// channels down to it.
    fn device_filter(
        &mut self,
        query: &str,
        system: &str,
        family: &str,
    ) -> Result<Option<String>, FinderError> {
        let numbers: Vec<u32> = tokenize(query)
            .iter()
            .filter_map(|t| t.parse::<u32>().ok())
            .collect();
        if numbers.is_empty() {
            return Ok(None);
        }
        let obs = self.act(
            "Query the device ordering indices to resolve the numbered device.",
            "get_indices",
            json!({ "system": system, "family": family }),
        )?;
        let present: BTreeSet<u32> = obs
            .as_array()
            .map(|a| a.iter().filter_map(Value::as_u64).map(|v| v as u32).collect())
            .unwrap_or_default();
        Ok(numbers
            .into_iter()
            .find(|n| present.contains(n))
            .map(|n| n.to_string()))
    }
}

fn value_pairs(obs: &Value) -> Vec<(String, String)> {
    obs.as_array()
        .map(|a| {
            a.iter()
                .map(|v| {
                    (
                        v["name"].as_str().unwrap_or_default().to_string(),
                        v["description"].as_str().unwrap_or_default().to_string(),
                    )
                })
                .collect()
        })
        .unwrap_or_default()
}

/// Full Paradigm 3c pipeline: decompose, detect domains, build specialized
/// prompts, run agents in parallel, aggregate. A sub-query hitting its
/// iteration limit abstains without failing its siblings.
pub fn find_middlelayer(
    query: &str,
    tree: &MmlTree,
    selector: &Selector,
    cfg: &MmlConfig,
    keyword_map: &KeywordMap,
    lib: &ExampleLibrary,
) -> Result<(FinderResult, Vec<MmlAgentTrace>), FinderError> {
    let subs = selector.decompose(query)?;
    let outcomes: Vec<Result<MmlAgentTrace, FinderError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = subs
            .iter()
            .map(|sub| {
                scope.spawn(move || {
                    let tags = detect_domains(&sub.text, keyword_map);
                    let prompt = build_agent_prompt(&sub.text, lib, &tags, cfg.example_cap);
                    let (channels, steps) = {
                        let mut agent = MmlAgent {
                            tree,
                            selector,
                            cfg,
                            prompt: &prompt,
                            steps: Vec::new(),
                            iterations: 0,
                        };
                        let channels = match agent.run(&sub.text, &tags) {
                            Ok(channels) => channels,
                            // Parallel isolation: an exhausted agent abstains.
                            Err(FinderError::IterationLimitExceeded(_)) => Vec::new(),
                            Err(e) => return Err(e),
                        };
                        (channels, agent.steps)
                    };
                    Ok(MmlAgentTrace {
                        sub_query: sub.text.clone(),
                        tags,
                        prompt,
                        steps,
                        channels,
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let known = tree.addresses();
    let mut channels: Vec<String> = Vec::new();
    let mut notes = Vec::new();
    let mut traces = Vec::new();
    for (sub, outcome) in subs.iter().zip(outcomes) {
        let trace = outcome?;
        if trace.channels.is_empty() {
            notes.push(format!("sub-query '{sub}' abstained"));
        }
        for c in &trace.channels {
            debug_assert!(known.contains(c.as_str()));
            if known.contains(c.as_str()) && !channels.contains(c) {
                channels.push(c.clone());
            }
        }
        traces.push(trace);
    }
    Ok((
        FinderResult {
            abstained: channels.is_empty(),
            channels,
            selector_calls: selector.calls_used(),
            notes,
        },
        traces,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selector::oracle::LexicalOracle;
    use std::sync::Arc;

    pub(crate) const SMALL_TREE: &str = r#"
systems:
  - name: SR
    description: storage ring
    families:
      - name: BPM
        description: beam position monitors
        fields:
          - name: X
            description: horizontal position monitor readings
            channels:
              - { address: "SR01C___BPM1__X_AM00", device_index: 1 }
              - { address: "SR02C___BPM2__X_AM01", device_index: 2 }
          - name: Y
            description: vertical position monitor readings
            channels:
              - { address: "SR01C___BPM1__Y_AM00", device_index: 1 }
              - { address: "SR02C___BPM2__Y_AM01", device_index: 2 }
      - name: QF
        description: focusing quadrupole magnets
        fields:
          - name: Setpoint
            description: current setpoint values
            channels:
              - { address: "SR01C___QF1___SP_AC00", device_index: 1 }
          - name: Monitor
            description: current monitor readings
            channels:
              - { address: "SR01C___QF1___AM_AC00", device_index: 1 }
  - name: BR
    description: booster ring
    families:
      - name: HCM
        description: horizontal corrector magnets
        fields:
          - name: Setpoint
            description: corrector strength setpoint values
            channels:
              - { address: "BR1___HCM1__SP_AC00", device_index: 1 }
              - { address: "BR1___HCM2__SP_AC01", device_index: 2 }
"#;

    fn tree() -> MmlTree {
        MmlTree::load_str(SMALL_TREE).unwrap()
    }

    fn keyword_map() -> KeywordMap {
        KeywordMap {
            rules: vec![
                KeywordRule {
                    system: "SR".into(),
                    query_type: None,
                    keywords: vec!["storage ring".into(), "sr".into()],
                },
                KeywordRule {
                    system: "SR".into(),
                    query_type: Some("beam-position".into()),
                    keywords: vec!["bpm".into(), "beam position".into(), "orbit".into()],
                },
                KeywordRule {
                    system: "BR".into(),
                    query_type: Some("magnet".into()),
                    keywords: vec!["booster".into(), "corrector".into()],
                },
            ],
        }
    }

    fn library() -> ExampleLibrary {
        ExampleLibrary {
            entries: vec![
                ExampleEntry {
                    tags: vec![TagPair {
                        system: "SR".into(),
                        query_type: Some("beam-position".into()),
                    }],
                    query: "horizontal orbit readings".into(),
                    tool_sequence: vec![
                        ToolCall {
                            tool: "list_systems".into(),
                            args: serde_json::json!({}),
                        },
                        ToolCall {
                            tool: "get_channels".into(),
                            args: serde_json::json!({ "system": "SR", "family": "BPM", "field": "X" }),
                        },
                    ],
                    answer: vec![
                        "SR01C___BPM1__X_AM00".into(),
                        "SR02C___BPM2__X_AM01".into(),
                    ],
                },
                ExampleEntry {
                    tags: vec![TagPair {
                        system: "BR".into(),
                        query_type: Some("magnet".into()),
                    }],
                    query: "booster corrector strengths".into(),
                    tool_sequence: vec![ToolCall {
                        tool: "get_channels".into(),
                        args: serde_json::json!({ "system": "BR", "family": "HCM", "field": "Setpoint" }),
                    }],
                    answer: vec!["BR1___HCM1__SP_AC00".into(), "BR1___HCM2__SP_AC01".into()],
                },
                ExampleEntry {
                    tags: vec![TagPair {
                        system: "general".into(),
                        query_type: None,
                    }],
                    query: "list available systems".into(),
                    tool_sequence: vec![ToolCall {
                        tool: "list_systems".into(),
                        args: serde_json::json!({}),
                    }],
                    answer: vec![],
                },
            ],
        }
    }

    fn selector() -> Selector {
        Selector::new(Arc::new(LexicalOracle::default()), 64)
    }

    #[test]
    fn loads_and_counts_channels() {
        let t = tree();
        assert_eq!(t.systems.len(), 2);
        assert_eq!(t.channel_count(), 8);
    }

    #[test]
    fn duplicate_family_names_are_rejected() {
        let doc = r#"
systems:
  - name: SR
    description: storage ring
    families:
      - { name: BPM, description: a, fields: [] }
      - { name: BPM, description: b, fields: [] }
"#;
        assert!(MmlTree::load_str(doc).is_err());
    }

    #[test]
    fn companion_database_holds_every_address() {
        let t = tree();
        let db = t.companion_database().unwrap();
        assert_eq!(db.len(), t.channel_count());
        t.validate_against(&db).unwrap();
    }

    #[test]
    fn finds_storage_ring_bpm_channels() {
        let t = tree();
        let sel = selector();
        let (result, traces) = find_middlelayer(
            "horizontal position monitor readings in the storage ring",
            &t,
            &sel,
            &MmlConfig::default(),
            &keyword_map(),
            &library(),
        )
        .unwrap();
        assert_eq!(
            result.channels,
            ["SR01C___BPM1__X_AM00", "SR02C___BPM2__X_AM01"]
        );
        assert_eq!(traces.len(), 1);
        assert!(traces[0].tags.iter().any(|t| t.system == "SR"));
    }

    #[test]
    fn two_system_compound_query_runs_two_agents() {
        let t = tree();
        let sel = selector();
        let (result, traces) = find_middlelayer(
            "storage ring quadrupole current monitor readings and booster corrector strength setpoint values",
            &t,
            &sel,
            &MmlConfig::default(),
            &keyword_map(),
            &library(),
        )
        .unwrap();
        assert_eq!(traces.len(), 2);
        assert!(result.channels.contains(&"SR01C___QF1___AM_AC00".to_string()));
        assert!(result.channels.contains(&"BR1___HCM1__SP_AC00".to_string()));
    }

    #[test]
    fn numbered_device_narrows_channels_by_index() {
        let t = tree();
        let sel = selector();
        let (result, _) = find_middlelayer(
            "storage ring beam position monitor 2 horizontal position readings",
            &t,
            &sel,
            &MmlConfig::default(),
            &keyword_map(),
            &library(),
        )
        .unwrap();
        assert_eq!(result.channels, ["SR02C___BPM2__X_AM01"]);
    }

    #[test]
    fn single_family_tree_is_a_forced_path() {
        let doc = r#"
systems:
  - name: LN
    description: linac
    families:
      - name: KLY
        description: klystrons
        fields:
          - name: Power
            description: forward power readings
            channels:
              - { address: "LN_KLY1_PWR", device_index: 1 }
"#;
        let t = MmlTree::load_str(doc).unwrap();
        let sel = selector();
        let (result, _) = find_middlelayer(
            "klystron forward power",
            &t,
            &sel,
            &MmlConfig::default(),
            &KeywordMap { rules: vec![] },
            &ExampleLibrary { entries: vec![] },
        )
        .unwrap();
        assert_eq!(result.channels, ["LN_KLY1_PWR"]);
    }

    #[test]
    fn every_returned_channel_exists_in_tree() {
        let t = tree();
        let known = t.addresses();
        for query in [
            "vertical position readings",
            "quadrupole current setpoint",
            "booster corrector strengths",
        ] {
            let sel = selector();
            let (result, _) = find_middlelayer(
                query,
                &t,
                &sel,
                &MmlConfig::default(),
                &keyword_map(),
                &library(),
            )
            .unwrap();
            for c in &result.channels {
                assert!(known.contains(c.as_str()), "{query} -> {c}");
            }
        }
    }

    #[test]
    fn library_tool_sequences_replay_against_the_tree() {
        let t = tree();
        for entry in &library().entries {
            for call in &entry.tool_sequence {
                execute_mml_tool(&t, &call.tool, &call.args)
                    .unwrap_or_else(|e| panic!("{}: {e}", call.tool));
            }
        }
    }
}
