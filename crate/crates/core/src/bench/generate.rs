//! Synthetic benchmark generation with known ground truth.
//!
//! The paper's expert query sets are private, so suites are generated from
//! the databases themselves: every case's expected set derives from the
//! generating record(s), and candidates whose ground truth would be
//! ambiguous under the deterministic oracle are skipped rather than
//! adapted. Difficulties: `verbatim` reuses descriptions, `paraphrase`
//! shuffles tokens and substitutes synonyms (reverting substitutions that
//! break discrimination), `adversarial` injects distractor tokens and
//! skips verification entirely.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::EngineConfig;
use crate::db::ChannelDatabase;
use crate::direct::oracle_names;
use crate::mml::{ExampleLibrary, KeywordMap, MmlTree};
use crate::selector::{lexical_score, oracle::LexicalOracle, Selector};
use crate::text::tokenize;
use crate::types::FinderError;

use super::{
    evaluate_query, BenchConfig, BenchTarget, BenchmarkCase, CaseMode, Paradigm,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Difficulty {
    Verbatim,
    Paraphrase,
    Adversarial,
}

impl std::str::FromStr for Difficulty {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "verbatim" => Ok(Difficulty::Verbatim),
            "paraphrase" => Ok(Difficulty::Paraphrase),
            "adversarial" => Ok(Difficulty::Adversarial),
            other => Err(format!("unknown difficulty '{other}'")),
        }
    }
}

/// Bundled synonym table for paraphrase generation.
pub const SYNONYMS: &[(&str, &str)] = &[
    ("pressure", "vacuum level"),
    ("readback", "reading"),
    ("setpoint", "target"),
    ("set", "adjust"),
    ("current", "amperage"),
    ("voltage", "potential"),
    ("temperature", "thermal reading"),
    ("monitor", "watcher"),
    ("monitors", "watchers"),
    ("position", "location"),
    ("system", "subsystem"),
    ("controller", "control unit"),
    ("gauge", "sensor"),
    ("firmware", "software"),
    ("horizontal", "x plane"),
    ("vertical", "y plane"),
    ("camera", "imager"),
];

/// Tokens that would trip query decomposition if they survived shuffling.
const CONJUNCTIONS: &[&str] = &["and", "plus", "as", "well", "&"];

/// What the generator draws cases from.
pub enum GeneratorTarget<'a> {
    Direct(&'a ChannelDatabase),
    Explore(&'a ChannelDatabase),
    Mml {
        tree: &'a MmlTree,
        keywords: &'a KeywordMap,
        library: &'a ExampleLibrary,
    },
}

impl GeneratorTarget<'_> {
    fn paradigm(&self) -> Paradigm {
        match self {
            GeneratorTarget::Direct(_) => Paradigm::Direct,
            GeneratorTarget::Explore(_) => Paradigm::Explore,
            GeneratorTarget::Mml { .. } => Paradigm::Mml,
        }
    }

    fn bench_target(&self) -> BenchTarget<'_> {
        match self {
            GeneratorTarget::Direct(db) | GeneratorTarget::Explore(db) => BenchTarget::Db(db),
            GeneratorTarget::Mml {
                tree,
                keywords,
                library,
            } => BenchTarget::Mml {
                tree,
                keywords,
                library,
            },
        }
    }
}

/// Generates `n` cases, deterministic in `(target, n, seed, difficulty)`.
pub fn generate_synthetic_benchmark(
    target: &GeneratorTarget,
    n: usize,
    seed: u64,
    difficulty: Difficulty,
) -> Result<Vec<BenchmarkCase>, FinderError> {
    if n == 0 {
        return Err(FinderError::Config("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases: Vec<BenchmarkCase> = Vec::new();
    let mut used_queries: BTreeSet<String> = BTreeSet::new();
    let mut attempts = 0;
    let max_attempts = n * 80;
    while cases.len() < n {
        attempts += 1;
        if attempts > max_attempts {
            return Err(FinderError::Config(format!(
                "could not derive {n} unambiguous cases after {max_attempts} attempts \
                 ({} found); the source database may be too small or too uniform",
                cases.len()
            )));
        }
        let Some((tokens, expected)) = draw_candidate(target, &mut rng) else {
            continue;
        };
        let query = mutate(tokens, &expected, target, difficulty, &mut rng);
        if query.is_empty() || used_queries.contains(&query) {
            continue;
        }
        // Skip candidates the deterministic oracle cannot answer exactly;
        // the expected set itself always comes from the generating records.
        if difficulty != Difficulty::Adversarial && !dry_run_matches(&query, &expected, target) {
            continue;
        }
        used_queries.insert(query.clone());
        cases.push(BenchmarkCase {
            id: format!("case-{:03}", cases.len() + 1),
            query,
            expected,
            mode: CaseMode::ExactSet,
        });
    }
    Ok(cases)
}

/// Draws one generating record and derives its ground truth.
fn draw_candidate(
    target: &GeneratorTarget,
    rng: &mut ChaCha8Rng,
) -> Option<(Vec<String>, BTreeSet<String>)> {
    match target {
        GeneratorTarget::Direct(db) => {
            let records = db.records();
            let record = &records[rng.gen_range(0..records.len())];
            let tokens = clean_tokens(&record.description);
            let query = tokens.join(" ");
            // Ground truth: every record tying at the maximum overlap, the
            // same tie rule the constrained selection applies.
            let names = oracle_names(
                &records
                    .iter()
                    .map(|r| (r.address.clone(), r.description.clone()))
                    .collect::<Vec<_>>(),
            );
            let scores: Vec<f64> = records
                .iter()
                .map(|r| {
                    let name = r.name.clone().unwrap_or_else(|| names[&r.address].clone());
                    lexical_score(&query, &format!("{name} {}", r.description))
                })
                .collect();
            let best = scores.iter().cloned().fold(0.0_f64, f64::max);
            if best <= 0.0 {
                return None;
            }
            let expected: BTreeSet<String> = records
                .iter()
                .zip(&scores)
                .filter(|(_, s)| **s >= best - 1e-9)
                .map(|(r, _)| r.address.clone())
                .collect();
            // Wide ties make weak cases.
            (expected.len() <= 3).then_some((tokens, expected))
        }
        GeneratorTarget::Explore(db) => {
            let records = db.records();
            let record = &records[rng.gen_range(0..records.len())];
            if record.path.len() != 4 {
                return None;
            }
            let mut tokens = clean_tokens(&record.description);
            // The compositional query names the installation point too.
            for (_, value) in record.path.iter().take(3) {
                tokens.extend(tokenize(value));
            }
            let expected: BTreeSet<String> = [record.address.clone()].into();
            Some((tokens, expected))
        }
        GeneratorTarget::Mml { tree, .. } => {
            let sys = &tree.systems[rng.gen_range(0..tree.systems.len())];
            if sys.families.is_empty() {
                return None;
            }
            let fam = &sys.families[rng.gen_range(0..sys.families.len())];
            if fam.fields.is_empty() {
                return None;
            }
            let field = &fam.fields[rng.gen_range(0..fam.fields.len())];
            if field.channels.is_empty() {
                return None;
            }
            let mut tokens = clean_tokens(&sys.description);
            tokens.extend(clean_tokens(&fam.description));
            tokens.extend(clean_tokens(&field.description));
            let expected: BTreeSet<String> =
                field.channels.iter().map(|c| c.address.clone()).collect();
            Some((tokens, expected))
        }
    }
}

fn clean_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !CONJUNCTIONS.contains(&t.as_str()))
        .collect()
}

/// Applies the difficulty transform to the candidate token list.
fn mutate(
    mut tokens: Vec<String>,
    expected: &BTreeSet<String>,
    target: &GeneratorTarget,
    difficulty: Difficulty,
    rng: &mut ChaCha8Rng,
) -> String {
    match difficulty {
        Difficulty::Verbatim => tokens.join(" "),
        Difficulty::Paraphrase => {
            tokens.shuffle(rng);
            let mut substituted = 0;
            for i in 0..tokens.len() {
                if substituted >= 2 {
                    break;
                }
                let Some((_, synonym)) = SYNONYMS.iter().find(|(w, _)| *w == tokens[i]) else {
                    continue;
                };
                if !rng.gen_bool(0.6) {
                    continue;
                }
                let saved = tokens[i].clone();
                tokens[i] = synonym.to_string();
                let candidate = tokens.join(" ");
                // A substitution that breaks discrimination is reverted.
                if dry_run_matches(&candidate, expected, target) {
                    substituted += 1;
                } else {
                    tokens[i] = saved;
                }
            }
            tokens.join(" ")
        }
        Difficulty::Adversarial => {
            tokens.shuffle(rng);
            let distractors = distractor_pool(target, expected);
            for _ in 0..rng.gen_range(1..=2usize) {
                if let Some(d) = distractors.choose(rng) {
                    let at = rng.gen_range(0..=tokens.len());
                    tokens.insert(at, d.clone());
                }
            }
            tokens.join(" ")
        }
    }
}

fn distractor_pool(target: &GeneratorTarget, expected: &BTreeSet<String>) -> Vec<String> {
    let own: BTreeSet<String> = expected.iter().flat_map(|a| tokenize(a)).collect();
    let mut pool: BTreeSet<String> = BTreeSet::new();
    match target {
        GeneratorTarget::Direct(db) | GeneratorTarget::Explore(db) => {
            for r in db.records().iter().take(200) {
                if !expected.contains(&r.address) {
                    pool.extend(tokenize(&r.description));
                }
            }
        }
        GeneratorTarget::Mml { tree, .. } => {
            for sys in &tree.systems {
                for fam in &sys.families {
                    pool.extend(tokenize(&fam.description));
                }
            }
        }
    }
    pool.difference(&own).cloned().collect()
}

/// Replays the query through the oracle-backed pipeline and checks the
/// returned set against the derived ground truth.
fn dry_run_matches(query: &str, expected: &BTreeSet<String>, target: &GeneratorTarget) -> bool {
    let cfg = BenchConfig {
        paradigm: target.paradigm(),
        backend_name: "oracle".into(),
        parallelism: 1,
        engine: EngineConfig::default(),
    };
    let selector = Selector::new(
        Arc::new(LexicalOracle::default()),
        cfg.engine.call_budget,
    );
    match evaluate_query(query, &target.bench_target(), &selector, &cfg) {
        Ok(returned) => {
            let returned: BTreeSet<String> = returned.into_iter().collect();
            &returned == expected
        }
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::run_benchmark;

    fn db() -> ChannelDatabase {
        ChannelDatabase::load_str(
            r#"
schema:
  pattern: "{0}:{1}.{2}"
  levels:
    - { name: group }
    - { name: signal }
    - { name: suffix, optional: true }
suffixes: { SP: setpoint, RB: readback }
tree:
  - value: VAC
    description: vacuum gauges
    children:
      - value: PRES
        description: chamber pressure
        children:
          - { value: SP, description: set point target }
          - { value: RB, description: readback value }
      - value: TEMP
        description: gauge temperature
        children:
          - { value: RB, description: readback value }
  - value: MAG
    description: bending magnets
    children:
      - value: CURR
        description: coil current
        children:
          - { value: SP, description: set point target }
          - { value: RB, description: readback value }
"#,
        )
        .unwrap()
    }

    #[test]
    fn verbatim_suite_scores_perfectly_by_construction_and_run() {
        let db = db();
        let target = GeneratorTarget::Direct(&db);
        let cases = generate_synthetic_benchmark(&target, 5, 7, Difficulty::Verbatim).unwrap();
        assert_eq!(cases.len(), 5);
        let report = run_benchmark(
            &cases,
            &BenchTarget::Db(&db),
            Arc::new(LexicalOracle::default()),
            &BenchConfig {
                paradigm: Paradigm::Direct,
                backend_name: "oracle".into(),
                parallelism: 1,
                engine: EngineConfig::default(),
            },
        )
        .unwrap();
        assert_eq!(report.accuracy, Some(1.0), "{}", report.to_json());
    }

    #[test]
    fn single_record_database_yields_the_one_answerable_case() {
        let db = ChannelDatabase::load_str(
            r#"
schema:
  pattern: "{0}"
  levels: [ { name: channel } ]
tree:
  - { value: ONLY, description: the lone diagnostic signal }
"#,
        )
        .unwrap();
        let target = GeneratorTarget::Direct(&db);
        let cases = generate_synthetic_benchmark(&target, 1, 3, Difficulty::Verbatim).unwrap();
        assert_eq!(cases.len(), 1);
        assert_eq!(cases[0].expected, ["ONLY".to_string()].into());
    }

    #[test]
    fn generation_is_deterministic_in_seed() {
        let db = db();
        let target = GeneratorTarget::Direct(&db);
        let a = generate_synthetic_benchmark(&target, 4, 11, Difficulty::Paraphrase).unwrap();
        let b = generate_synthetic_benchmark(&target, 4, 11, Difficulty::Paraphrase).unwrap();
        let c = generate_synthetic_benchmark(&target, 4, 12, Difficulty::Paraphrase).unwrap();
        assert_eq!(serde_yaml::to_string(&a).unwrap(), serde_yaml::to_string(&b).unwrap());
        assert_ne!(serde_yaml::to_string(&a).unwrap(), serde_yaml::to_string(&c).unwrap());
    }

    #[test]
    fn expected_sets_come_from_generating_records() {
        let db = db();
        let target = GeneratorTarget::Direct(&db);
        let cases = generate_synthetic_benchmark(&target, 5, 21, Difficulty::Verbatim).unwrap();
        for case in &cases {
            assert!(!case.expected.is_empty());
            for address in &case.expected {
                assert!(db.contains(address));
            }
        }
    }

    #[test]
    fn adversarial_adds_distractor_tokens() {
        let db = db();
        let target = GeneratorTarget::Direct(&db);
        let verbatim = generate_synthetic_benchmark(&target, 3, 5, Difficulty::Verbatim).unwrap();
        let adversarial =
            generate_synthetic_benchmark(&target, 3, 5, Difficulty::Adversarial).unwrap();
        let v_len: usize = verbatim.iter().map(|c| c.query.split(' ').count()).sum();
        let a_len: usize = adversarial.iter().map(|c| c.query.split(' ').count()).sum();
        assert!(a_len > v_len);
    }
}
