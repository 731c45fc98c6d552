//! Graph-pattern query subset: `SELECT ?vars WHERE { pattern . pattern }`
//! with conjunctive triple patterns and a `+` closure marker on hierarchy
//! predicates. No OPTIONAL, FILTER, or other path operators; the subset
//! covers the queries the ontology paradigm needs while staying small
//! enough to verify against brute-force joins.

use std::collections::{BTreeMap, BTreeSet};

use super::{OntoError, TripleStore};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternTerm {
    Var(String),
    Const(String),
}

impl PatternTerm {
    fn render(&self) -> String {
        match self {
            PatternTerm::Var(v) => format!("?{v}"),
            PatternTerm::Const(c) => c.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
    /// Reflexive-transitive closure over the (constant) predicate.
    pub closure: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphQuery {
    pub select_vars: Vec<String>,
    pub patterns: Vec<TriplePattern>,
}

impl GraphQuery {
    /// Canonical text form in the subset grammar.
    pub fn render(&self) -> String {
        let vars: Vec<String> = self.select_vars.iter().map(|v| format!("?{v}")).collect();
        let patterns: Vec<String> = self
            .patterns
            .iter()
            .map(|p| {
                format!(
                    "{} {}{} {}",
                    p.subject.render(),
                    p.predicate.render(),
                    if p.closure { "+" } else { "" },
                    p.object.render()
                )
            })
            .collect();
        format!("SELECT {} WHERE {{ {} }}", vars.join(" "), patterns.join(" . "))
    }
}

/// Variable bindings produced by evaluation: set semantics, rows sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bindings {
    pub vars: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Soft diagnostics, e.g. closure requested on a non-hierarchy
    /// predicate or a predicate absent from the store.
    pub warnings: Vec<String>,
}

impl Bindings {
    /// Values bound to one variable across all rows, deduplicated.
    pub fn column(&self, var: &str) -> Vec<String> {
        let Some(idx) = self.vars.iter().position(|v| v == var) else {
            return Vec::new();
        };
        let mut out: Vec<String> = self.rows.iter().map(|r| r[idx].clone()).collect();
        out.sort();
        out.dedup();
        out
    }
}

struct Tokenizer<'a> {
    chars: Vec<char>,
    pos: usize,
    text: &'a str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Token {
    text: String,
    pos: usize,
}

impl<'a> Tokenizer<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            chars: text.chars().collect(),
            pos: 0,
            text,
        }
    }

    fn error(&self, pos: usize, msg: impl Into<String>) -> OntoError {
        let (mut line, mut col) = (1, 1);
        for (i, c) in self.text.chars().enumerate() {
            if i == pos {
                break;
            }
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        OntoError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Option<Token> {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
        if self.pos >= self.chars.len() {
            return None;
        }
        let start = self.pos;
        let c = self.chars[self.pos];
        if c == '{' || c == '}' || c == '.' {
            self.pos += 1;
            return Some(Token {
                text: c.to_string(),
                pos: start,
            });
        }
        if c == '"' {
            self.pos += 1;
            while self.pos < self.chars.len() && self.chars[self.pos] != '"' {
                self.pos += 1;
            }
            self.pos = (self.pos + 1).min(self.chars.len());
            return Some(Token {
                text: self.chars[start..self.pos].iter().collect(),
                pos: start,
            });
        }
        while self.pos < self.chars.len()
            && !self.chars[self.pos].is_whitespace()
            && !matches!(self.chars[self.pos], '{' | '}')
        {
            self.pos += 1;
        }
        // A trailing '.' separates patterns unless it is inside the token
        // body (e.g. a dotted name); only a bare final dot splits off.
        let mut token: String = self.chars[start..self.pos].iter().collect();
        if token.len() > 1 && token.ends_with('.') {
            token.truncate(token.len() - 1);
            self.pos -= 1;
        }
        Some(Token { text: token, pos: start })
    }
}

/// Parses the documented subset grammar. Errors carry line and column.
pub fn parse_query(text: &str) -> Result<GraphQuery, OntoError> {
    let mut tz = Tokenizer::new(text);
    let select = tz
        .next()
        .ok_or_else(|| tz.error(0, "empty query"))?;
    if !select.text.eq_ignore_ascii_case("select") {
        return Err(tz.error(select.pos, "query must start with SELECT"));
    }
    let mut select_vars = Vec::new();
    let where_tok = loop {
        let tok = tz
            .next()
            .ok_or_else(|| tz.error(tz.chars.len(), "expected WHERE"))?;
        if tok.text.eq_ignore_ascii_case("where") {
            break tok;
        }
        match tok.text.strip_prefix('?') {
            Some(v) if !v.is_empty() => select_vars.push(v.to_string()),
            _ => return Err(tz.error(tok.pos, format!("expected ?variable, found '{}'", tok.text))),
        }
    };
    if select_vars.is_empty() {
        return Err(tz.error(where_tok.pos, "SELECT needs at least one variable"));
    }
    let open = tz
        .next()
        .ok_or_else(|| tz.error(tz.chars.len(), "expected '{'"))?;
    if open.text != "{" {
        return Err(tz.error(open.pos, "expected '{' after WHERE"));
    }
    let mut patterns = Vec::new();
    let mut terms: Vec<Token> = Vec::new();
    loop {
        let tok = tz
            .next()
            .ok_or_else(|| tz.error(tz.chars.len(), "unterminated WHERE block"))?;
        match tok.text.as_str() {
            "." | "}" => {
                if !terms.is_empty() {
                    patterns.push(pattern_from(&terms, &tz)?);
                    terms.clear();
                }
                if tok.text == "}" {
                    break;
                }
            }
            _ => terms.push(tok),
        }
    }
    if patterns.is_empty() {
        return Err(tz.error(open.pos, "WHERE block has no patterns"));
    }
    let bound: BTreeSet<&String> = patterns
        .iter()
        .flat_map(|p| [&p.subject, &p.predicate, &p.object])
        .filter_map(|t| match t {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Const(_) => None,
        })
        .collect();
    for v in &select_vars {
        if !bound.contains(v) {
            return Err(tz.error(0, format!("selected variable ?{v} appears in no pattern")));
        }
    }
    Ok(GraphQuery {
        select_vars,
        patterns,
    })
}

fn pattern_from(terms: &[Token], tz: &Tokenizer) -> Result<TriplePattern, OntoError> {
    if terms.len() != 3 {
        return Err(tz.error(
            terms.first().map(|t| t.pos).unwrap_or(0),
            format!("pattern needs 3 terms, found {}", terms.len()),
        ));
    }
    let term = |tok: &Token| -> PatternTerm {
        match tok.text.strip_prefix('?') {
            Some(v) => PatternTerm::Var(v.to_string()),
            None => PatternTerm::Const(tok.text.clone()),
        }
    };
    let (ptext, closure) = match terms[1].text.strip_suffix('+') {
        Some(base) if !base.starts_with('?') => (base.to_string(), true),
        _ => (terms[1].text.clone(), false),
    };
    if terms[1].text.starts_with('?') && terms[1].text.ends_with('+') {
        return Err(tz.error(terms[1].pos, "closure requires a concrete predicate"));
    }
    let predicate = if closure {
        PatternTerm::Const(ptext)
    } else {
        term(&terms[1])
    };
    Ok(TriplePattern {
        subject: term(&terms[0]),
        predicate,
        object: term(&terms[2]),
        closure,
    })
}

/// Evaluates conjunctive patterns over the store: all variable bindings
/// satisfying every pattern, projected to the selected variables, with set
/// semantics and sorted output.
pub fn evaluate(query: &GraphQuery, store: &TripleStore) -> Result<Bindings, OntoError> {
    let mut warnings = Vec::new();
    let mut bindings: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
    for pattern in &query.patterns {
        // Candidate (s, p, o) rows for this pattern.
        let candidates: Vec<(String, String, String)> = if pattern.closure {
            let PatternTerm::Const(pred) = &pattern.predicate else {
                return Err(OntoError::Config("closure over a variable predicate".into()));
            };
            if !store.is_hierarchy_predicate(pred) {
                warnings.push(format!(
                    "closure requested on non-hierarchy predicate '{pred}'"
                ));
            }
            let (pairs, _) = store.closure_pairs(pred);
            pairs
                .into_iter()
                .map(|(s, o)| (s, pred.clone(), o))
                .collect()
        } else {
            if let PatternTerm::Const(pred) = &pattern.predicate {
                if !store.triples().iter().any(|t| &t.predicate == pred) {
                    warnings.push(format!("predicate '{pred}' not present in store"));
                }
            }
            store
                .triples()
                .iter()
                .map(|t| (t.subject.clone(), t.predicate.clone(), t.object.clone()))
                .collect()
        };
        let mut next: Vec<BTreeMap<String, String>> = Vec::new();
        for binding in &bindings {
            for (s, p, o) in &candidates {
                let mut extended = binding.clone();
                if unify(&pattern.subject, s, &mut extended)
                    && unify(&pattern.predicate, p, &mut extended)
                    && unify(&pattern.object, o, &mut extended)
                {
                    next.push(extended);
                }
            }
        }
        bindings = next;
        if bindings.is_empty() {
            break;
        }
    }
    let mut rows: BTreeSet<Vec<String>> = BTreeSet::new();
    for binding in &bindings {
        let row: Vec<String> = query
            .select_vars
            .iter()
            .map(|v| binding.get(v).cloned().unwrap_or_default())
            .collect();
        rows.insert(row);
    }
    Ok(Bindings {
        vars: query.select_vars.clone(),
        rows: rows.into_iter().collect(),
        warnings,
    })
}

fn unify(term: &PatternTerm, value: &str, binding: &mut BTreeMap<String, String>) -> bool {
    match term {
        PatternTerm::Const(c) => c == value,
        PatternTerm::Var(v) => match binding.get(v) {
            Some(bound) => bound == value,
            None => {
                binding.insert(v.clone(), value.to_string());
                true
            }
        },
    }
}
