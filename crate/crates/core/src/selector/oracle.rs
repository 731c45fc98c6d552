//! Deterministic lexical oracle backend.
//!
//! Selections are argmax of token-overlap score; decomposition splits on
//! coordinating conjunctions between noun phrases. Identical inputs give
//! identical outputs across runs and platforms, which makes every pipeline
//! testable offline.

use serde_json::Value;

use crate::text::lexical_score;

use super::{BackendKind, ChoiceRequest, DecisionBackend, RawChoice, SelectorError};

#[derive(Debug, Clone)]
pub struct LexicalOracle {
    /// Best score below this abstains when abstention is allowed.
    pub abstain_threshold: f64,
}

impl Default for LexicalOracle {
    fn default() -> Self {
        Self {
            abstain_threshold: 0.15,
        }
    }
}

impl LexicalOracle {
    pub fn with_threshold(abstain_threshold: f64) -> Self {
        Self { abstain_threshold }
    }
}

/// Tie tolerance for float-identical overlap scores.
const TIE_EPS: f64 = 1e-9;

impl DecisionBackend for LexicalOracle {
    fn kind(&self) -> BackendKind {
        BackendKind::LexicalOracle
    }

    fn choose(&self, req: &ChoiceRequest, _attempt: u32) -> Result<RawChoice, SelectorError> {
        let query = req.query();
        // Ranking uses the query-normalized score; the abstention gate uses
        // the symmetric maximum so that a short option fully covered by a
        // long query still counts as signal.
        let mut gate = 0.0_f64;
        let scored: Vec<(usize, f64)> = req
            .options
            .iter()
            .enumerate()
            .map(|(i, opt)| {
                let text = format!("{} {}", opt.label, opt.description);
                let s = lexical_score(query, &text);
                gate = gate.max(s).max(lexical_score(&text, query));
                (i, s)
            })
            .collect();
        let best = scored.iter().map(|&(_, s)| s).fold(0.0_f64, f64::max);
        if req.allow_abstain && gate < self.abstain_threshold {
            return Ok(RawChoice {
                selected: vec![],
                abstained: true,
                rationale: Some(format!("best overlap {gate:.3} below threshold")),
            });
        }
        let selected: Vec<String> = if best <= 0.0 {
            // Forced choice with no signal: minimal commitment, smallest id.
            let id = req
                .options
                .iter()
                .map(|o| o.id.clone())
                .min()
                .expect("validated non-empty options");
            vec![id]
        } else if req.multi_select {
            // All options tied at the maximum, in presentation order.
            scored
                .iter()
                .filter(|&&(_, s)| s >= best - TIE_EPS)
                .map(|&(i, _)| req.options[i].id.clone())
                .collect()
        } else {
            // Argmax, ties broken lexicographically by id.
            let id = scored
                .iter()
                .filter(|&&(_, s)| s >= best - TIE_EPS)
                .map(|&(i, _)| req.options[i].id.clone())
                .min()
                .expect("non-empty scored set");
            vec![id]
        };
        Ok(RawChoice {
            selected,
            abstained: false,
            rationale: None,
        })
    }

    fn decompose(&self, query: &str) -> Result<Vec<String>, SelectorError> {
        Ok(split_conjunctions(query))
    }

    fn complete_structured(
        &self,
        _prompt: &str,
        _response_schema: &Value,
    ) -> Result<Value, SelectorError> {
        Err(SelectorError::BackendUnavailable(
            "lexical oracle has no completion transport".into(),
        ))
    }
}

/// Separators recognized between coordinated noun phrases, longest first.
const SEPARATORS: &[&str] = &[
    ", as well as ",
    " as well as ",
    ", and ",
    "; and ",
    " and ",
    " plus ",
    " & ",
    ", ",
    "; ",
];

/// Splits a query on coordinating conjunctions. Atomic queries come back
/// as a single segment, so the split is idempotent.
pub fn split_conjunctions(query: &str) -> Vec<String> {
    let lower = query.to_lowercase();
    let bytes = lower.as_bytes();
    let mut segments = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        let mut matched = None;
        for sep in SEPARATORS {
            if lower[i..].starts_with(sep) {
                matched = Some(sep.len());
                break;
            }
        }
        match matched {
            Some(len) => {
                segments.push(query[start..i].trim().to_string());
                i += len;
                start = i;
            }
            None => {
                i += 1;
                while i < bytes.len() && !lower.is_char_boundary(i) {
                    i += 1;
                }
            }
        }
    }
    segments.push(query[start..].trim().to_string());
    segments.retain(|s| !s.is_empty());
    if segments.len() <= 1 {
        vec![query.trim().to_string()]
    } else {
        segments
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selector::{ChoiceOption, Selector};
    use std::sync::Arc;

    #[test]
    fn single_option_with_overlap_is_selected() {
        let oracle = LexicalOracle::default();
        let req = ChoiceRequest::for_query(
            "",
            "vacuum pressure",
            vec![ChoiceOption::new("a", "Vacuum", "chamber pressure readings")],
            false,
            false,
        );
        let raw = oracle.choose(&req, 0).unwrap();
        assert_eq!(raw.selected, ["a"]);
    }

    #[test]
    fn booster_query_picks_booster_system() {
        let oracle = LexicalOracle::default();
        let req = ChoiceRequest::for_query(
            "Select the accelerator system.",
            "orbit corrector strengths in the booster",
            vec![
                ChoiceOption::new("sr", "storage ring", "main storage ring with orbit correctors"),
                ChoiceOption::new("br", "booster", "booster synchrotron with orbit correctors"),
                ChoiceOption::new("inj", "injector", "injection line components"),
            ],
            false,
            true,
        );
        let raw = oracle.choose(&req, 0).unwrap();
        assert_eq!(raw.selected, ["br"]);
    }

    #[test]
    fn twenty_option_argmax_matches_independent_rescoring() {
        let oracle = LexicalOracle::default();
        let options: Vec<ChoiceOption> = (0..20)
            .map(|i| {
                ChoiceOption::new(
                    format!("opt{i:02}"),
                    format!("Channel {i}"),
                    format!("signal number {i} for subsystem {}", i % 4),
                )
            })
            .collect();
        let req =
            ChoiceRequest::for_query("", "signal number 13", options.clone(), false, true);
        let raw = oracle.choose(&req, 0).unwrap();
        // Independent argmax with lexicographic tie-break.
        let mut best_id: Option<&str> = None;
        let mut best_score = f64::MIN;
        for opt in &options {
            let s = lexical_score(
                "signal number 13",
                &format!("{} {}", opt.label, opt.description),
            );
            let better = s > best_score + TIE_EPS
                || ((s - best_score).abs() <= TIE_EPS
                    && best_id.is_some_and(|b| opt.id.as_str() < b));
            if better || best_id.is_none() {
                best_score = s.max(best_score);
                best_id = Some(&opt.id);
            }
        }
        assert_eq!(raw.selected, [best_id.unwrap()]);
    }

    #[test]
    fn abstains_below_threshold_when_allowed() {
        let oracle = LexicalOracle::default();
        let req = ChoiceRequest::for_query(
            "",
            "warp core plasma conduits",
            vec![
                ChoiceOption::new("a", "Vacuum", "chamber pressure"),
                ChoiceOption::new("b", "Magnets", "bending field"),
            ],
            false,
            true,
        );
        let raw = oracle.choose(&req, 0).unwrap();
        assert!(raw.abstained);
        assert!(raw.selected.is_empty());
    }

    #[test]
    fn multi_select_takes_all_ties_at_max() {
        let oracle = LexicalOracle::default();
        let req = ChoiceRequest::for_query(
            "",
            "sector pressure",
            vec![
                ChoiceOption::new("s1", "SEC01", "vacuum sector 1"),
                ChoiceOption::new("s2", "SEC02", "vacuum sector 2"),
                ChoiceOption::new("pump", "PUMPS", "pump room"),
            ],
            true,
            true,
        );
        let raw = oracle.choose(&req, 0).unwrap();
        assert_eq!(raw.selected, ["s1", "s2"]);
    }

    #[test]
    fn splits_conjoined_targets() {
        assert_eq!(
            split_conjunctions("pressure and temperature"),
            ["pressure", "temperature"]
        );
        assert_eq!(
            split_conjunctions("BPM x, BPM y and BPM sum"),
            ["BPM x", "BPM y", "BPM sum"]
        );
        assert_eq!(split_conjunctions("beam current"), ["beam current"]);
    }

    #[test]
    fn decompose_is_idempotent_on_atoms() {
        let compound = "gauge pressure and pump voltage as well as magnet current";
        for part in split_conjunctions(compound) {
            assert_eq!(split_conjunctions(&part), [part.clone()]);
        }
    }

    #[test]
    fn oracle_is_deterministic_across_selectors() {
        let mk = || Selector::new(Arc::new(LexicalOracle::default()), 32);
        let req = ChoiceRequest::for_query(
            "",
            "readback of the terminal voltage",
            vec![
                ChoiceOption::new("a", "TerminalVoltageSetPoint", "terminal voltage set point"),
                ChoiceOption::new("b", "TerminalVoltageReadback", "terminal voltage readback"),
            ],
            false,
            true,
        );
        let r1 = mk().choose(&req).unwrap();
        let r2 = mk().choose(&req).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.selected, ["b"]);
    }
}
