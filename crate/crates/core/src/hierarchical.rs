//! Paradigm 2: constrained hierarchical navigation.
//!
//! The selector descends the schema's levels one constrained choice at a
//! time, so cost scales with tree depth instead of channel count and
//! invalid names cannot be produced at all. Multi-selections branch, each
//! path independently exploring its remaining levels; optional levels may
//! terminate a path early, either at a shallow leaf or through an explicit
//! stop-here entry.

use std::sync::atomic::{AtomicBool, Ordering};

use crate::config::TreeConfig;
use crate::db::{ChannelDatabase, SuffixRole, TreeNode};
use crate::selector::{ChoiceOption, ChoiceRequest, Selector};
use crate::text::tokenize;
use crate::types::{FinderError, FinderResult, SubQuery};

const FRAMING: &str = "Navigate the control-system hierarchy. \
Select the entries that match the query at this level.";

/// One recorded navigation choice.
#[derive(Debug, Clone, serde::Serialize)]
pub struct NavStep {
    pub level: String,
    pub options_presented: Vec<String>,
    pub selected: Vec<String>,
    pub branched: bool,
}

/// Trace of one sub-query's descent. Every recorded step consumed exactly
/// one selector call; silently auto-descended single-option levels are not
/// steps.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct NavTrace {
    pub steps: Vec<NavStep>,
    pub selector_calls: u32,
    pub paths: Vec<Vec<(String, String)>>,
}

/// Suffix intent detected from query wording: "set ..." resolves setpoint
/// suffixes, "check current ..." / "read ..." resolve readbacks. The first
/// intent-bearing token in query order wins.
pub fn suffix_intent(query: &str) -> Option<SuffixRole> {
    for token in tokenize(query) {
        match token.as_str() {
            "set" | "write" | "apply" | "adjust" | "setpoint" => {
                return Some(SuffixRole::Setpoint)
            }
            "read" | "check" | "current" | "measure" | "monitor" | "readback" | "show" => {
                return Some(SuffixRole::Readback)
            }
            "command" | "trigger" | "execute" | "toggle" | "reset" | "start" | "stop" => {
                return Some(SuffixRole::Command)
            }
            _ => {}
        }
    }
    None
}

struct Nav<'a> {
    db: &'a ChannelDatabase,
    selector: &'a Selector,
    cfg: &'a TreeConfig,
    sub: &'a SubQuery,
    intent: Option<SuffixRole>,
    backtrack_used: AtomicBool,
}

/// Recursive constrained descent for one atomic sub-query.
pub fn navigate(
    sub: &SubQuery,
    db: &ChannelDatabase,
    selector: &Selector,
    cfg: &TreeConfig,
) -> Result<NavTrace, FinderError> {
    navigate_with_intent(sub, db, selector, cfg, suffix_intent(&sub.text))
}

pub fn navigate_with_intent(
    sub: &SubQuery,
    db: &ChannelDatabase,
    selector: &Selector,
    cfg: &TreeConfig,
    intent: Option<SuffixRole>,
) -> Result<NavTrace, FinderError> {
    if db.tree().is_empty() {
        return Err(FinderError::Config(
            "database has no navigable tree".into(),
        ));
    }
    let nav = Nav {
        db,
        selector,
        cfg,
        sub,
        intent,
        backtrack_used: AtomicBool::new(false),
    };
    let roots: Vec<&TreeNode> = db.tree().iter().collect();
    let (steps, paths) = nav.descend(&roots, Vec::new())?;
    Ok(NavTrace {
        selector_calls: steps.len() as u32,
        steps,
        paths,
    })
}

type Descent = (Vec<NavStep>, Vec<Vec<(String, String)>>);

impl Nav<'_> {
    /// Chooses among sibling nodes and explores the selection. An empty
    /// path list signals a dead end to the caller.
    fn descend<'t>(
        &self,
        siblings: &[&'t TreeNode],
        path: Vec<(String, String)>,
    ) -> Result<Descent, FinderError> {
        let mut steps = Vec::new();
        let candidates = self.filter_by_intent(siblings);
        let mut remaining: Vec<&'t TreeNode> = candidates.clone();
        let mut selection: Vec<&'t TreeNode>;
        if candidates.len() == 1 {
            selection = candidates;
        } else {
            let resp = self.present(&candidates, &mut steps)?;
            if resp.is_empty() {
                return Ok((steps, Vec::new()));
            }
            selection = resp;
        }
        loop {
            remaining.retain(|n| !selection.iter().any(|s| s.value == n.value));
            let (branch_steps, paths) = self.explore(&selection, &path)?;
            steps.extend(branch_steps);
            if !paths.is_empty() {
                return Ok((steps, paths));
            }
            // Dead end below every selected node: one backtrack, once per
            // navigation, re-choosing among the untried siblings.
            if remaining.is_empty() || self.backtrack_used.swap(true, Ordering::SeqCst) {
                return Ok((steps, Vec::new()));
            }
            let retry = self.present(&remaining, &mut steps)?;
            if retry.is_empty() {
                return Ok((steps, Vec::new()));
            }
            selection = retry;
        }
    }

    /// One constrained selection over sibling nodes; records the step.
    fn present<'t>(
        &self,
        candidates: &[&'t TreeNode],
        steps: &mut Vec<NavStep>,
    ) -> Result<Vec<&'t TreeNode>, FinderError> {
        let options: Vec<ChoiceOption> = candidates
            .iter()
            .map(|n| {
                let label = if n.value.is_empty() {
                    "(stop here)".to_string()
                } else {
                    n.value.clone()
                };
                ChoiceOption::new(n.value.clone(), label, n.description.clone())
            })
            .collect();
        let req = ChoiceRequest::for_query(FRAMING, &self.sub.text, options, true, true);
        let resp = self.selector.choose(&req)?;
        // Deterministic branch order: reorder the selection to option order.
        let mut selected_nodes: Vec<&'t TreeNode> = candidates
            .iter()
            .filter(|n| resp.selected.iter().any(|id| *id == n.value))
            .copied()
            .collect();
        selected_nodes.truncate(self.cfg.branch_cap);
        steps.push(NavStep {
            level: candidates[0].level.clone(),
            options_presented: candidates.iter().map(|n| n.value.clone()).collect(),
            selected: selected_nodes.iter().map(|n| n.value.clone()).collect(),
            branched: selected_nodes.len() > 1,
        });
        Ok(selected_nodes)
    }

    /// Explores selected nodes, branches concurrently.
    fn explore(
        &self,
        selection: &[&TreeNode],
        path: &[(String, String)],
    ) -> Result<Descent, FinderError> {
        let outcomes: Vec<Result<Descent, FinderError>> = if selection.len() == 1 {
            vec![self.explore_one(selection[0], path)]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = selection
                    .iter()
                    .map(|node| scope.spawn(move || self.explore_one(node, path)))
                    .collect();
                handles.into_iter().map(|h| h.join().unwrap()).collect()
            })
        };
        let mut steps = Vec::new();
        let mut paths = Vec::new();
        for outcome in outcomes {
            let (s, p) = outcome?;
            steps.extend(s);
            paths.extend(p);
        }
        Ok((steps, paths))
    }

    fn explore_one(&self, node: &TreeNode, path: &[(String, String)]) -> Result<Descent, FinderError> {
        let mut here = path.to_vec();
        if !node.value.is_empty() {
            here.push((node.level.clone(), node.value.clone()));
        }
        if node.is_leaf() {
            return Ok((Vec::new(), vec![here]));
        }
        let children: Vec<&TreeNode> = node.children.iter().collect();
        self.descend(&children, here)
    }

    /// At a suffix choice point (every sibling value in the declared suffix
    /// vocabulary), honors the query's read/set/command intent.
    fn filter_by_intent<'t>(&self, siblings: &[&'t TreeNode]) -> Vec<&'t TreeNode> {
        let Some(intent) = self.intent else {
            return siblings.to_vec();
        };
        let vocab = self.db.schema().suffix_vocabulary();
        let all_suffix = siblings
            .iter()
            .all(|n| !n.value.is_empty() && vocab.contains_key(&n.value));
        if !all_suffix {
            return siblings.to_vec();
        }
        let matching: Vec<&TreeNode> = siblings
            .iter()
            .filter(|n| vocab.get(&n.value) == Some(&intent))
            .copied()
            .collect();
        if matching.is_empty() {
            siblings.to_vec()
        } else {
            matching
        }
    }
}

/// Full Paradigm 2 pipeline: decompose, navigate each sub-query, assemble
/// and validate addresses. Returns the per-sub-query traces alongside the
/// result.
pub fn find_hierarchical(
    query: &str,
    db: &ChannelDatabase,
    selector: &Selector,
    cfg: &TreeConfig,
) -> Result<(FinderResult, Vec<NavTrace>), FinderError> {
    let intent = suffix_intent(query);
    let subs = selector.decompose(query)?;
    let outcomes: Vec<Result<NavTrace, FinderError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = subs
            .iter()
            .map(|sub| scope.spawn(move || navigate_with_intent(sub, db, selector, cfg, intent)))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut traces = Vec::new();
    let mut channels: Vec<String> = Vec::new();
    let mut notes = Vec::new();
    for (sub, outcome) in subs.iter().zip(outcomes) {
        let trace = outcome?;
        if trace.paths.is_empty() {
            notes.push(format!("sub-query '{sub}' abstained"));
        }
        for path in &trace.paths {
            let address = db.schema().assemble(path)?;
            if !channels.contains(&address) {
                channels.push(address);
            }
        }
        traces.push(trace);
    }
    let (channels, invalid) = db.validate_channels(&channels);
    debug_assert!(invalid.is_empty(), "assembled path missing from database");
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
