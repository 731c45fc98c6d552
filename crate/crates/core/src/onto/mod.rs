//! Paradigm 4: ontology-grounded semantic search.
//!
//! Domain knowledge lives in a triple store as subject-predicate-object
//! facts; devices and signals are grounded in shared classes and role
//! predicates so the same query template answers correctly over
//! differently-mapped facility graphs. Only subclass-style closure over
//! explicit triples is implemented; terms are opaque strings with an
//! optional namespace-prefix table.

mod map;
mod query;
mod translate;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use map::{map_channels_to_graph, ClassRule, GraphMapping};
pub use query::{evaluate, parse_query, Bindings, GraphQuery, PatternTerm, TriplePattern};
pub use translate::{translate_nl, QueryTemplate, RoleOption, TemplateSet};

use crate::selector::SelectorError;

#[derive(Debug, Error)]
pub enum OntoError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("unmapped device family: {0}")]
    UnmappedFamily(String),
    #[error("no template matches the query")]
    NoTemplateMatch,
    #[error("literal term in {0} position")]
    LiteralPosition(String),
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error("{0}")]
    Config(String),
}

/// One subject-predicate-object fact. Terms are opaque strings; literals
/// keep their surrounding quotes and may only appear in object position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl Triple {
    pub fn new(
        subject: impl Into<String>,
        predicate: impl Into<String>,
        object: impl Into<String>,
    ) -> Self {
        Self {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }
}

pub fn is_literal(term: &str) -> bool {
    term.starts_with('"')
}

/// Strips the quotes off a literal term.
pub fn literal_text(term: &str) -> &str {
    term.trim_matches('"')
}

/// Deduplicated triple store with stable insertion order.
#[derive(Debug, Clone, Default)]
pub struct TripleStore {
    triples: Vec<Triple>,
    seen: BTreeSet<(String, String, String)>,
    prefixes: BTreeMap<String, String>,
    hierarchy_predicates: BTreeSet<String>,
}

impl TripleStore {
    pub fn new() -> Self {
        let mut store = Self::default();
        store
            .hierarchy_predicates
            .insert("rdfs:subClassOf".to_string());
        store
    }

    /// Inserts a triple; returns false if it was already present.
    pub fn insert(&mut self, triple: Triple) -> Result<bool, OntoError> {
        if is_literal(&triple.subject) {
            return Err(OntoError::LiteralPosition("subject".into()));
        }
        if is_literal(&triple.predicate) {
            return Err(OntoError::LiteralPosition("predicate".into()));
        }
        if triple.subject.is_empty() || triple.predicate.is_empty() || triple.object.is_empty() {
            return Err(OntoError::Config("empty term in triple".into()));
        }
        let key = (
            triple.subject.clone(),
            triple.predicate.clone(),
            triple.object.clone(),
        );
        if self.seen.insert(key) {
            self.triples.push(triple);
            Ok(true)
        } else {
            Ok(false)
        }
    }

    pub fn extend(&mut self, triples: impl IntoIterator<Item = Triple>) -> Result<(), OntoError> {
        for t in triples {
            self.insert(t)?;
        }
        Ok(())
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.seen
            .contains(&(t.subject.clone(), t.predicate.clone(), t.object.clone()))
    }

    pub fn prefixes(&self) -> &BTreeMap<String, String> {
        &self.prefixes
    }

    /// Marks a predicate as hierarchical (eligible for `+` closure without
    /// a warning). `rdfs:subClassOf` is designated by default.
    pub fn designate_hierarchy(&mut self, predicate: impl Into<String>) {
        self.hierarchy_predicates.insert(predicate.into());
    }

    pub fn is_hierarchy_predicate(&self, predicate: &str) -> bool {
        self.hierarchy_predicates.contains(predicate)
    }

    /// All terms appearing anywhere in the store.
    pub fn terms(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for t in &self.triples {
            out.insert(t.subject.as_str());
            out.insert(t.predicate.as_str());
            out.insert(t.object.as_str());
        }
        out
    }

    /// Objects of `(subject, predicate, ?)`.
    pub fn objects(&self, subject: &str, predicate: &str) -> Vec<&str> {
        self.triples
            .iter()
            .filter(|t| t.subject == subject && t.predicate == predicate)
            .map(|t| t.object.as_str())
            .collect()
    }

    /// Reflexive-transitive closure pairs of a predicate: every node
    /// incident to the predicate reaches itself, plus all multi-hop
    /// reachability. Returns the pair set and any cyclic node groups.
    pub fn closure_pairs(&self, predicate: &str) -> (BTreeSet<(String, String)>, Vec<Vec<String>>) {
        let mut nodes: BTreeSet<&str> = BTreeSet::new();
        let mut edges: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for t in &self.triples {
            if t.predicate == predicate {
                nodes.insert(t.subject.as_str());
                nodes.insert(t.object.as_str());
                edges.entry(t.subject.as_str()).or_default().push(t.object.as_str());
            }
        }
        let mut pairs = BTreeSet::new();
        let mut reach: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for &start in &nodes {
            let mut seen: BTreeSet<&str> = BTreeSet::new();
            let mut stack = vec![start];
            while let Some(n) = stack.pop() {
                if seen.insert(n) {
                    if let Some(next) = edges.get(n) {
                        stack.extend(next.iter().copied());
                    }
                }
            }
            seen.insert(start);
            for n in &seen {
                pairs.insert((start.to_string(), n.to_string()));
            }
            reach.insert(start, seen);
        }
        // Cyclic groups: mutually reachable nodes (non-singleton strongly
        // connected components). Each group is reported once, sorted.
        let mut cycles: Vec<Vec<String>> = Vec::new();
        let mut grouped: BTreeSet<&str> = BTreeSet::new();
        for &a in &nodes {
            if grouped.contains(a) {
                continue;
            }
            let mut group: Vec<&str> = nodes
                .iter()
                .copied()
                .filter(|&b| reach.get(a).is_some_and(|r| r.contains(b)) && reach.get(b).is_some_and(|r| r.contains(a)))
                .collect();
            if group.len() > 1 {
                grouped.extend(group.iter().copied());
                group.sort_unstable();
                cycles.push(group.into_iter().map(String::from).collect());
            }
        }
        (pairs, cycles)
    }
}

/// Result of closure materialization: the closed store plus any cycle
/// reports. Cycles do not prevent the closure from being well-defined.
#[derive(Debug)]
pub struct ClosureOutcome {
    pub store: TripleStore,
    pub cycles: Vec<Vec<String>>,
}

/// Adds the reflexive-transitive closure of `predicate` to the store.
/// Idempotent: a second application adds nothing.
pub fn materialize_closure(store: &TripleStore, predicate: &str) -> Result<ClosureOutcome, OntoError> {
    let (pairs, cycles) = store.closure_pairs(predicate);
    let mut out = store.clone();
    for (s, o) in pairs {
        out.insert(Triple::new(s, predicate, o))?;
    }
    Ok(ClosureOutcome { store: out, cycles })
}

/// Parses the line-oriented triple format: `subject predicate object .`
/// per line, `#` comments, quoted literals, and optional
/// `@prefix name: <expansion> .` declarations recorded in the prefix table.
pub fn load_graph(text: &str) -> Result<TripleStore, OntoError> {
    let mut store = TripleStore::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let terms = scan_terms(line, lineno + 1)?;
        if terms.first().map(String::as_str) == Some("@prefix") {
            if terms.len() != 3 {
                return Err(OntoError::Syntax {
                    line: lineno + 1,
                    col: 1,
                    msg: "@prefix takes a name and an expansion".into(),
                });
            }
            let name = terms[1].trim_end_matches(':').to_string();
            let expansion = terms[2].trim_matches(['<', '>']).to_string();
            store.prefixes.insert(name, expansion);
            continue;
        }
        if terms.len() != 3 {
            return Err(OntoError::Syntax {
                line: lineno + 1,
                col: 1,
                msg: format!("expected 3 terms and '.', found {}", terms.len()),
            });
        }
        store.insert(Triple::new(&terms[0], &terms[1], &terms[2]))?;
    }
    Ok(store)
}

/// Splits one statement line into terms, handling quoted literals; the
/// trailing `.` terminator is required and consumed.
fn scan_terms(line: &str, lineno: usize) -> Result<Vec<String>, OntoError> {
    let mut terms: Vec<String> = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        if chars[i] == '"' {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                i += 1;
            }
            if i >= chars.len() {
                return Err(OntoError::Syntax {
                    line: lineno,
                    col: start + 1,
                    msg: "unterminated literal".into(),
                });
            }
            i += 1;
            terms.push(chars[start..i].iter().collect());
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        terms.push(chars[start..i].iter().collect());
    }
    match terms.last().map(String::as_str) {
        Some(".") => {
            terms.pop();
        }
        // A bare final term may carry the terminator directly.
        Some(t) if t.len() > 1 && t.ends_with('.') && !t.starts_with('"') => {
            let last = terms.last_mut().unwrap();
            last.truncate(last.len() - 1);
        }
        _ => {
            return Err(OntoError::Syntax {
                line: lineno,
                col: line.chars().count(),
                msg: "statement must end with '.'".into(),
            })
        }
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_line_format_with_literals_and_prefixes() {
        let text = r#"
# core classes
@prefix acc: <http://example.org/accelerator#> .
acc:Quadrupole rdfs:subClassOf acc:Magnet .
acc:Magnet rdfs:label "magnet" .
"#;
        let store = load_graph(text).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(
            store.prefixes().get("acc").map(String::as_str),
            Some("http://example.org/accelerator#")
        );
        assert_eq!(store.objects("acc:Magnet", "rdfs:label"), ["\"magnet\""]);
    }

    #[test]
    fn literal_with_spaces_stays_one_term() {
        let store = load_graph("pv:X acc:hasLabel \"The camera image (8 bit)\" .").unwrap();
        assert_eq!(
            store.triples()[0].object,
            "\"The camera image (8 bit)\""
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match load_graph("a b c") {
            Err(OntoError::Syntax { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected syntax error, got {other:?}"),
        }
        match load_graph("a b .") {
            Err(OntoError::Syntax { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn literals_are_rejected_outside_object_position() {
        assert!(matches!(
            load_graph("\"lit\" p o ."),
            Err(OntoError::LiteralPosition(_))
        ));
    }

    #[test]
    fn three_node_chain_closes_with_reflexive_edges() {
        let mut store = TripleStore::new();
        store
            .extend([
                Triple::new("A", "rdfs:subClassOf", "B"),
                Triple::new("B", "rdfs:subClassOf", "C"),
            ])
            .unwrap();
        let out = materialize_closure(&store, "rdfs:subClassOf").unwrap();
        assert!(out.cycles.is_empty());
        let closed = out.store;
        for (s, o) in [
            ("A", "B"),
            ("B", "C"),
            ("A", "C"),
            ("A", "A"),
            ("B", "B"),
            ("C", "C"),
        ] {
            assert!(
                closed.contains(&Triple::new(s, "rdfs:subClassOf", o)),
                "{s} -> {o} missing"
            );
        }
        assert_eq!(closed.len(), 6);
    }

    #[test]
    fn closure_is_idempotent() {
        let mut store = TripleStore::new();
        store
            .extend([
                Triple::new("A", "rdfs:subClassOf", "B"),
                Triple::new("B", "rdfs:subClassOf", "C"),
                Triple::new("X", "rdf:type", "A"),
            ])
            .unwrap();
        let once = materialize_closure(&store, "rdfs:subClassOf").unwrap().store;
        let twice = materialize_closure(&once, "rdfs:subClassOf").unwrap().store;
        assert_eq!(once.len(), twice.len());
        assert_eq!(once.triples(), twice.triples());
    }

    #[test]
    fn closure_matches_repeated_squaring() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..60 {
            let n = rng.gen_range(2..9usize);
            let mut adj = vec![vec![false; n]; n];
            let mut store = TripleStore::new();
            let mut incident = vec![false; n];
            for i in 0..n {
                for j in 0..n {
                    if i != j && rng.gen_bool(0.2) {
                        adj[i][j] = true;
                        incident[i] = true;
                        incident[j] = true;
                        store
                            .insert(Triple::new(
                                format!("N{i}"),
                                "rdfs:subClassOf",
                                format!("N{j}"),
                            ))
                            .unwrap();
                    }
                }
            }
            // Independent oracle: boolean matrix repeated squaring, then
            // reflexive completion on incident nodes.
            let mut m = adj.clone();
            loop {
                let mut next = m.clone();
                for i in 0..n {
                    for k in 0..n {
                        if m[i][k] {
                            for j in 0..n {
                                if m[k][j] {
                                    next[i][j] = true;
                                }
                            }
                        }
                    }
                }
                if next == m {
                    break;
                }
                m = next;
            }
            let closed = materialize_closure(&store, "rdfs:subClassOf").unwrap().store;
            for i in 0..n {
                for j in 0..n {
                    let expected = (incident[i] && i == j && incident[j]) || m[i][j];
                    let got = closed.contains(&Triple::new(
                        format!("N{i}"),
                        "rdfs:subClassOf",
                        format!("N{j}"),
                    ));
                    assert_eq!(got, expected, "pair N{i} N{j}");
                }
            }
        }
    }

    #[test]
    fn cycles_are_reported_and_closure_still_works() {
        let mut store = TripleStore::new();
        store
            .extend([
                Triple::new("A", "rdfs:subClassOf", "B"),
                Triple::new("B", "rdfs:subClassOf", "A"),
                Triple::new("C", "rdfs:subClassOf", "A"),
            ])
            .unwrap();
        let out = materialize_closure(&store, "rdfs:subClassOf").unwrap();
        assert_eq!(out.cycles.len(), 1);
        assert_eq!(out.cycles[0], ["A", "B"]);
        assert!(out.store.contains(&Triple::new("C", "rdfs:subClassOf", "B")));
    }

    #[test]
    fn duplicate_insertion_is_ignored() {
        let mut store = TripleStore::new();
        assert!(store.insert(Triple::new("a", "b", "c")).unwrap());
        assert!(!store.insert(Triple::new("a", "b", "c")).unwrap());
        assert_eq!(store.len(), 1);
    }
}
