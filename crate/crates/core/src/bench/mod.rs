//! Benchmark execution and scoring.
//!
//! The harness runs any finder paradigm over a case file, computes
//! exact-match accuracy, selector-call counts, and per-case latency, and
//! never aborts on a failing case. Scoring is paradigm-independent, and
//! the canonical report serialization is deterministic given the results
//! (wall-clock timings are reported separately and excluded from it).

pub mod generate;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::db::ChannelDatabase;
use crate::direct::find_direct;
use crate::explorer::find_explorer;
use crate::hierarchical::find_hierarchical;
use crate::mml::{find_middlelayer, ExampleLibrary, KeywordMap, MmlTree};
use crate::onto::{evaluate, translate_nl, OntoError, TemplateSet, TripleStore};
use crate::selector::{DecisionBackend, Selector};
use crate::types::FinderError;

pub use generate::{generate_synthetic_benchmark, Difficulty, GeneratorTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseMode {
    ExactSet,
    Superset,
    AnyOf,
}

/// One benchmark case. An empty `expected` set with `ExactSet` mode
/// encodes expected abstention.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkCase {
    pub id: String,
    pub query: String,
    pub expected: BTreeSet<String>,
    pub mode: CaseMode,
}

/// Paradigm-independent verdict for one case.
pub fn score_case(
    returned: &BTreeSet<String>,
    expected: &BTreeSet<String>,
    mode: CaseMode,
) -> bool {
    match mode {
        CaseMode::ExactSet => returned == expected,
        CaseMode::Superset => expected.is_subset(returned),
        CaseMode::AnyOf => !returned.is_disjoint(expected),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Paradigm {
    Direct,
    Tree,
    Explore,
    Mml,
    Onto,
}

impl std::str::FromStr for Paradigm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(Paradigm::Direct),
            "tree" => Ok(Paradigm::Tree),
            "explore" => Ok(Paradigm::Explore),
            "mml" => Ok(Paradigm::Mml),
            "onto" => Ok(Paradigm::Onto),
            other => Err(format!("unknown paradigm '{other}'")),
        }
    }
}

impl std::fmt::Display for Paradigm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Paradigm::Direct => "direct",
            Paradigm::Tree => "tree",
            Paradigm::Explore => "explore",
            Paradigm::Mml => "mml",
            Paradigm::Onto => "onto",
        };
        f.write_str(s)
    }
}

/// What a paradigm runs against.
pub enum BenchTarget<'a> {
    Db(&'a ChannelDatabase),
    Mml {
        tree: &'a MmlTree,
        keywords: &'a KeywordMap,
        library: &'a ExampleLibrary,
    },
    Onto {
        store: &'a TripleStore,
        templates: &'a TemplateSet,
    },
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub paradigm: Paradigm,
    pub backend_name: String,
    pub parallelism: usize,
    pub engine: EngineConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub id: String,
    pub returned: Vec<String>,
    pub expected: Vec<String>,
    pub correct: bool,
    pub selector_calls: u32,
    pub wall_time_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub paradigm: String,
    pub backend: String,
    /// Synthetic suites are flagged: the expert query sets they stand in
    /// for are not public.
    pub synthetic: bool,
    pub case_count: usize,
    pub correct_count: usize,
    /// Null when the run had no cases.
    pub accuracy: Option<f64>,
    pub call_histogram: BTreeMap<u32, usize>,
    pub cases: Vec<CaseReport>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::to_value(self).expect("report serializes"))
            .expect("report serializes")
    }

    /// Deterministic serialization: identical results give identical bytes,
    /// so wall-clock timings are stripped.
    pub fn canonical_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Some(cases) = value.get_mut("cases").and_then(|c| c.as_array_mut()) {
            for case in cases {
                if let Some(obj) = case.as_object_mut() {
                    obj.remove("wall_time_ms");
                }
            }
        }
        serde_json::to_string_pretty(&value).expect("report serializes")
    }
}

/// Executes every case with a fresh call budget; failures are counted,
/// never aborting the run. Cases may run concurrently up to the configured
/// parallelism; the report is assembled in case-id order.
pub fn run_benchmark(
    cases: &[BenchmarkCase],
    target: &BenchTarget,
    backend: Arc<dyn DecisionBackend>,
    cfg: &BenchConfig,
) -> Result<RunReport, FinderError> {
    check_target(cfg.paradigm, target)?;
    let parallelism = cfg.parallelism.max(1);
    let mut reports: Vec<CaseReport> = std::thread::scope(|scope| {
        let chunks: Vec<&[BenchmarkCase]> =
            cases.chunks(cases.len().div_ceil(parallelism).max(1)).collect();
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| {
                let backend = Arc::clone(&backend);
                scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|case| run_case(case, target, Arc::clone(&backend), cfg))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    reports.sort_by(|a, b| a.id.cmp(&b.id));
    let correct_count = reports.iter().filter(|r| r.correct).count();
    let mut call_histogram: BTreeMap<u32, usize> = BTreeMap::new();
    for r in &reports {
        *call_histogram.entry(r.selector_calls).or_default() += 1;
    }
    Ok(RunReport {
        paradigm: cfg.paradigm.to_string(),
        backend: cfg.backend_name.clone(),
        synthetic: true,
        case_count: reports.len(),
        correct_count,
        accuracy: (!reports.is_empty())
            .then(|| correct_count as f64 / reports.len() as f64),
        call_histogram,
        cases: reports,
    })
}

fn check_target(paradigm: Paradigm, target: &BenchTarget) -> Result<(), FinderError> {
    let ok = matches!(
        (paradigm, target),
        (Paradigm::Direct | Paradigm::Tree | Paradigm::Explore, BenchTarget::Db(_))
            | (Paradigm::Mml, BenchTarget::Mml { .. })
            | (Paradigm::Onto, BenchTarget::Onto { .. })
    );
    ok.then_some(()).ok_or_else(|| {
        FinderError::Config(format!(
            "paradigm '{paradigm}' does not match the provided target"
        ))
    })
}

fn run_case(
    case: &BenchmarkCase,
    target: &BenchTarget,
    backend: Arc<dyn DecisionBackend>,
    cfg: &BenchConfig,
) -> CaseReport {
    let selector = Selector::new(backend, cfg.engine.call_budget);
    let started = Instant::now();
    let outcome = evaluate_query(&case.query, target, &selector, cfg);
    let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    let (returned, error) = match outcome {
        Ok(channels) => (channels, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let returned_set: BTreeSet<String> = returned.iter().cloned().collect();
    let mut returned: Vec<String> = returned_set.iter().cloned().collect();
    returned.sort();
    CaseReport {
        id: case.id.clone(),
        correct: error.is_none() && score_case(&returned_set, &case.expected, case.mode),
        returned,
        expected: case.expected.iter().cloned().collect(),
        selector_calls: selector.calls_used(),
        wall_time_ms,
        error,
    }
}

/// Dispatches one query through the configured paradigm.
pub fn evaluate_query(
    query: &str,
    target: &BenchTarget,
    selector: &Selector,
    cfg: &BenchConfig,
) -> Result<Vec<String>, FinderError> {
    match (cfg.paradigm, target) {
        (Paradigm::Direct, BenchTarget::Db(db)) => {
            Ok(find_direct(query, db, selector, &cfg.engine.direct)?.channels)
        }
        (Paradigm::Tree, BenchTarget::Db(db)) => {
            Ok(find_hierarchical(query, db, selector, &cfg.engine.tree)?.0.channels)
        }
        (Paradigm::Explore, BenchTarget::Db(db)) => {
            Ok(find_explorer(query, db, selector, &cfg.engine.explorer)?.0.channels)
        }
        (Paradigm::Mml, BenchTarget::Mml { tree, keywords, library }) => Ok(find_middlelayer(
            query,
            tree,
            selector,
            &cfg.engine.mml,
            keywords,
            library,
        )?
        .0
        .channels),
        (Paradigm::Onto, BenchTarget::Onto { store, templates }) => {
            match translate_nl(query, templates, selector, store) {
                Ok(graph_query) => {
                    let out = evaluate(&graph_query, store)
                        .map_err(|e| FinderError::Config(e.to_string()))?;
                    let var = graph_query.select_vars.first().cloned().unwrap_or_default();
                    Ok(out.column(&var))
                }
                Err(OntoError::NoTemplateMatch) => Ok(Vec::new()),
                Err(e) => Err(FinderError::Config(e.to_string())),
            }
        }
        _ => Err(FinderError::Config(
            "paradigm does not match the provided target".into(),
        )),
    }
}

/// Loads a case file (YAML or JSON list).
pub fn load_cases(text: &str) -> Result<Vec<BenchmarkCase>, FinderError> {
    serde_yaml::from_str(text).map_err(|e| FinderError::Config(format!("case file: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selector::oracle::LexicalOracle;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn exact_set_requires_equality() {
        assert!(score_case(&set(&["a"]), &set(&["a"]), CaseMode::ExactSet));
        assert!(!score_case(&set(&["a", "b"]), &set(&["a"]), CaseMode::ExactSet));
        assert!(score_case(&set(&["a", "b"]), &set(&["a"]), CaseMode::Superset));
        assert!(score_case(&set(&["a", "b"]), &set(&["b", "z"]), CaseMode::AnyOf));
        assert!(!score_case(&set(&[]), &set(&["b"]), CaseMode::AnyOf));
        // Expected abstention.
        assert!(score_case(&set(&[]), &set(&[]), CaseMode::ExactSet));
    }

    #[test]
    fn fuzzed_scoring_matches_set_algebra() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let pool = ["a", "b", "c", "d", "e"];
        for _ in 0..500 {
            let pick = |rng: &mut rand_chacha::ChaCha8Rng| -> BTreeSet<String> {
                pool.iter()
                    .filter(|_| rng.gen_bool(0.4))
                    .map(|s| s.to_string())
                    .collect()
            };
            let returned = pick(&mut rng);
            let expected = pick(&mut rng);
            assert_eq!(
                score_case(&returned, &expected, CaseMode::ExactSet),
                returned.iter().eq(expected.iter())
            );
            assert_eq!(
                score_case(&returned, &expected, CaseMode::Superset),
                expected.iter().all(|e| returned.contains(e))
            );
            assert_eq!(
                score_case(&returned, &expected, CaseMode::AnyOf),
                expected.iter().any(|e| returned.contains(e))
            );
        }
    }

    #[test]
    fn harness_scoring_is_paradigm_independent() {
        // Same returned/expected, same verdict, whatever produced them.
        let returned = set(&["x", "y"]);
        let expected = set(&["x", "y"]);
        let verdicts: Vec<bool> = (0..5)
            .map(|_| score_case(&returned, &expected, CaseMode::ExactSet))
            .collect();
        assert!(verdicts.iter().all(|&v| v));
    }

    fn tiny_db() -> ChannelDatabase {
        ChannelDatabase::load_str(
            r#"
schema:
  pattern: "{0}:{1}"
  levels: [ { name: group }, { name: signal } ]
tree:
  - value: VAC
    description: vacuum gauges
    children:
      - { value: PRES, description: chamber pressure reading }
      - { value: TEMP, description: gauge temperature reading }
"#,
        )
        .unwrap()
    }

    fn cfg(paradigm: Paradigm) -> BenchConfig {
        BenchConfig {
            paradigm,
            backend_name: "oracle".into(),
            parallelism: 2,
            engine: EngineConfig::default(),
        }
    }

    #[test]
    fn runs_cases_without_aborting_on_failures() {
        let db = tiny_db();
        let cases = vec![
            BenchmarkCase {
                id: "c-001".into(),
                query: "chamber pressure reading".into(),
                expected: set(&["VAC:PRES"]),
                mode: CaseMode::ExactSet,
            },
            BenchmarkCase {
                id: "c-002".into(),
                query: "zz qq".into(),
                expected: set(&["VAC:TEMP"]),
                mode: CaseMode::ExactSet,
            },
        ];
        let report = run_benchmark(
            &cases,
            &BenchTarget::Db(&db),
            Arc::new(LexicalOracle::default()),
            &cfg(Paradigm::Direct),
        )
        .unwrap();
        assert_eq!(report.case_count, 2);
        assert_eq!(report.correct_count, 1);
        assert_eq!(report.accuracy, Some(0.5));
        assert!(report.cases.iter().all(|c| c.selector_calls >= 1));
        assert_eq!(report.cases[0].id, "c-001");
    }

    #[test]
    fn empty_case_list_reports_null_accuracy() {
        let db = tiny_db();
        let report = run_benchmark(
            &[],
            &BenchTarget::Db(&db),
            Arc::new(LexicalOracle::default()),
            &cfg(Paradigm::Direct),
        )
        .unwrap();
        assert_eq!(report.case_count, 0);
        assert_eq!(report.accuracy, None);
        assert!(report.to_json().contains("\"accuracy\": null"));
    }

    #[test]
    fn reruns_are_byte_identical_in_canonical_form() {
        let db = tiny_db();
        let cases = vec![BenchmarkCase {
            id: "c-001".into(),
            query: "gauge temperature reading".into(),
            expected: set(&["VAC:TEMP"]),
            mode: CaseMode::ExactSet,
        }];
        let run = || {
            run_benchmark(
                &cases,
                &BenchTarget::Db(&db),
                Arc::new(LexicalOracle::default()),
                &cfg(Paradigm::Direct),
            )
            .unwrap()
            .canonical_json()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn mismatched_target_is_a_config_error() {
        let db = tiny_db();
        assert!(matches!(
            run_benchmark(
                &[],
                &BenchTarget::Db(&db),
                Arc::new(LexicalOracle::default()),
                &cfg(Paradigm::Mml),
            ),
            Err(FinderError::Config(_))
        ));
    }

    #[test]
    fn case_files_round_trip() {
        let cases = vec![BenchmarkCase {
            id: "q1".into(),
            query: "pressure".into(),
            expected: set(&["VAC:PRES"]),
            mode: CaseMode::AnyOf,
        }];
        let text = serde_yaml::to_string(&cases).unwrap();
        let loaded = load_cases(&text).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].id, "q1");
        assert!(matches!(loaded[0].mode, CaseMode::AnyOf));
    }
}
