//! Tokenization and token-overlap scoring.
//!
//! The lexical score is the deterministic stand-in for semantic matching:
//! it drives the offline oracle backend and the fuzzy address ranking, so
//! every pipeline can be exercised without network access.

use std::collections::BTreeSet;

/// Splits text into lowercase tokens at whitespace, punctuation, digit
/// boundaries, and intra-word case transitions.
///
/// `"TerminalVoltageSetPoint"` tokenizes to `terminal voltage set point`;
/// `"GAUGE03"` to `gauge 03`; acronym runs stay whole (`"BPMReading"` to
/// `bpm reading`).
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            flush(&mut cur, &mut out);
            continue;
        }
        if !cur.is_empty() {
            let prev = chars[i - 1];
            let digit_boundary = prev.is_ascii_digit() != c.is_ascii_digit();
            let camel = prev.is_lowercase() && c.is_uppercase();
            // End of an acronym run: "BPMReading" breaks before the 'R'.
            let acronym_end = prev.is_uppercase()
                && c.is_uppercase()
                && chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if digit_boundary || camel || acronym_end {
                flush(&mut cur, &mut out);
            }
        }
        cur.extend(c.to_lowercase());
    }
    flush(&mut cur, &mut out);
    out
}

fn flush(cur: &mut String, out: &mut Vec<String>) {
    if !cur.is_empty() {
        out.push(std::mem::take(cur));
    }
}

/// Token set of a text (see [`tokenize`]).
pub fn token_set(text: &str) -> BTreeSet<String> {
    tokenize(text).into_iter().collect()
}

/// Fraction of query tokens found in the candidate: |T(q) ∩ T(c)| / |T(q)|.
///
/// Pure and deterministic; an empty query scores 0 against everything.
pub fn lexical_score(query: &str, candidate: &str) -> f64 {
    let q = token_set(query);
    if q.is_empty() {
        return 0.0;
    }
    let c = token_set(candidate);
    let hits = q.intersection(&c).count();
    hits as f64 / q.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_case_transitions() {
        assert_eq!(
            tokenize("TerminalVoltageSetPoint"),
            vec!["terminal", "voltage", "set", "point"]
        );
    }

    #[test]
    fn splits_acronym_runs() {
        assert_eq!(tokenize("BPMReading"), vec!["bpm", "reading"]);
        assert_eq!(tokenize("readBPM"), vec!["read", "bpm"]);
    }

    #[test]
    fn splits_digit_boundaries_and_punctuation() {
        assert_eq!(tokenize("GAUGE03.SP"), vec!["gauge", "03", "sp"]);
        assert_eq!(tokenize("VAC-SEC01:GCTRL"), vec!["vac", "sec", "01", "gctrl"]);
    }

    #[test]
    fn identity_scores_one() {
        assert_eq!(lexical_score("x", "x"), 1.0);
    }

    #[test]
    fn empty_query_scores_zero() {
        assert_eq!(lexical_score("", "anything"), 0.0);
        assert_eq!(lexical_score("   ", "anything"), 0.0);
    }

    #[test]
    fn score_is_query_normalized() {
        // two of four query tokens present
        let s = lexical_score("terminal voltage set point", "voltage setpoint of the terminal");
        // "setpoint" keeps "set" and "point" out? "setpoint" -> token "setpoint",
        // distinct from "set"/"point": hits are {terminal, voltage}.
        assert!((s - 0.5).abs() < 1e-12);
    }

    // Independent reference: mark boundaries by inserting spaces, then split.
    fn reference_tokens(text: &str) -> BTreeSet<String> {
        let cs: Vec<char> = text.chars().collect();
        let mut spaced = String::new();
        for i in 0..cs.len() {
            let c = cs[i];
            if !c.is_alphanumeric() {
                spaced.push(' ');
                continue;
            }
            if i > 0 && cs[i - 1].is_alphanumeric() {
                let p = cs[i - 1];
                if p.is_ascii_digit() != c.is_ascii_digit()
                    || (p.is_lowercase() && c.is_uppercase())
                    || (p.is_uppercase()
                        && c.is_uppercase()
                        && i + 1 < cs.len()
                        && cs[i + 1].is_lowercase())
                {
                    spaced.push(' ');
                }
            }
            spaced.push(c);
        }
        spaced
            .split_whitespace()
            .map(|t| t.to_lowercase())
            .collect()
    }

    #[test]
    fn matches_reference_tokenizer_on_seeded_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let alphabet: Vec<char> = "abcXYZ09._-: /".chars().collect();
        for _ in 0..100 {
            let len = rng.gen_range(0..40);
            let q: String = (0..len)
                .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
                .collect();
            let len = rng.gen_range(0..40);
            let c: String = (0..len)
                .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
                .collect();
            assert_eq!(token_set(&q), reference_tokens(&q), "query {q:?}");
            let qs = reference_tokens(&q);
            let expected = if qs.is_empty() {
                0.0
            } else {
                qs.intersection(&reference_tokens(&c)).count() as f64 / qs.len() as f64
            };
            assert_eq!(lexical_score(&q, &c), expected, "pair {q:?} / {c:?}");
        }
    }
}
