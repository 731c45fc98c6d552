//! Hierarchy schema: ordered level definitions plus the naming-pattern
//! template that turns a path of level values into a concrete address.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::DbError;

/// Role encoded by the trailing address token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuffixRole {
    Setpoint,
    Readback,
    Command,
    Status,
    None,
}

impl std::fmt::Display for SuffixRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SuffixRole::Setpoint => "setpoint",
            SuffixRole::Readback => "readback",
            SuffixRole::Command => "command",
            SuffixRole::Status => "status",
            SuffixRole::None => "none",
        };
        f.write_str(s)
    }
}

/// One level of the hierarchy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelDef {
    pub name: String,
    pub ordinal: usize,
    pub optional: bool,
    /// Literal emitted before this level's value (dropped when the level
    /// is omitted, and never emitted before the first present level).
    pub separator_before: String,
}

/// Ordered levels plus the naming-pattern template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchySchema {
    levels: Vec<LevelDef>,
    pattern: String,
    /// Literal before the first placeholder in the pattern.
    leading: String,
    suffix_vocabulary: BTreeMap<String, SuffixRole>,
}

impl HierarchySchema {
    /// Builds a schema from a pattern like `"{0}-{1}:{2}:{3}:{4}.{5}"` and
    /// the level list. The placeholder count must equal the level count and
    /// placeholders must appear in order.
    pub fn new(
        pattern: &str,
        levels: Vec<(String, bool)>,
        suffix_vocabulary: BTreeMap<String, SuffixRole>,
    ) -> Result<Self, DbError> {
        let (leading, separators) = parse_pattern(pattern, levels.len())?;
        let levels = levels
            .into_iter()
            .zip(separators)
            .enumerate()
            .map(|(ordinal, ((name, optional), separator_before))| LevelDef {
                name,
                ordinal,
                optional,
                separator_before,
            })
            .collect::<Vec<_>>();
        let mut seen = BTreeSet::new();
        for level in &levels {
            if !seen.insert(level.name.clone()) {
                return Err(DbError::Schema(format!(
                    "duplicate level name '{}'",
                    level.name
                )));
            }
        }
        Ok(Self {
            levels,
            pattern: pattern.to_string(),
            leading,
            suffix_vocabulary,
        })
    }

    pub fn levels(&self) -> &[LevelDef] {
        &self.levels
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn suffix_vocabulary(&self) -> &BTreeMap<String, SuffixRole> {
        &self.suffix_vocabulary
    }

    pub fn level_named(&self, name: &str) -> Option<&LevelDef> {
        self.levels.iter().find(|l| l.name == name)
    }

    /// Role of a path's final component, [`SuffixRole::None`] when the
    /// component is not in the declared suffix vocabulary.
    pub fn suffix_role_of(&self, path: &[(String, String)]) -> SuffixRole {
        path.last()
            .and_then(|(_, value)| self.suffix_vocabulary.get(value))
            .copied()
            .unwrap_or(SuffixRole::None)
    }

    /// Substitutes path values into the pattern. Optional levels that are
    /// absent (or carry an empty value) are omitted together with their
    /// separators. Pure function of its inputs.
    pub fn assemble(&self, path: &[(String, String)]) -> Result<String, DbError> {
        let mut values: Vec<Option<&str>> = vec![None; self.levels.len()];
        let mut last_ordinal = None;
        for (name, value) in path {
            let level = self
                .level_named(name)
                .ok_or_else(|| DbError::UnknownLevel(name.clone()))?;
            if let Some(prev) = last_ordinal {
                if level.ordinal <= prev {
                    return Err(DbError::Schema(format!(
                        "path levels out of order at '{name}'"
                    )));
                }
            }
            last_ordinal = Some(level.ordinal);
            if !value.is_empty() {
                values[level.ordinal] = Some(value);
            }
        }
        let mut out = self.leading.clone();
        let mut first = true;
        for level in &self.levels {
            match values[level.ordinal] {
                Some(value) => {
                    if !first {
                        out.push_str(&level.separator_before);
                    }
                    out.push_str(value);
                    first = false;
                }
                None if level.optional => {}
                None => return Err(DbError::MissingLevel(level.name.clone())),
            }
        }
        Ok(out)
    }

    /// Inverse of [`assemble`](Self::assemble), guided by the per-level
    /// value vocabulary of a loaded database. Returns the first full parse,
    /// preferring to consume a level over skipping it; within a level,
    /// longer values are tried first so that `GAUGE10` is not shadowed by
    /// `GAUGE1`.
    pub fn parse_with_vocab(
        &self,
        address: &str,
        vocab: &[BTreeSet<String>],
    ) -> Option<Vec<(String, String)>> {
        let rest = address.strip_prefix(self.leading.as_str())?;
        let mut sorted: Vec<Vec<&str>> = Vec::with_capacity(self.levels.len());
        for level in &self.levels {
            let mut vs: Vec<&str> = vocab
                .get(level.ordinal)
                .map(|s| s.iter().map(String::as_str).collect())
                .unwrap_or_default();
            vs.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
            sorted.push(vs);
        }
        let mut path = Vec::new();
        if self.parse_rec(rest, 0, &sorted, &mut path) {
            Some(path)
        } else {
            None
        }
    }

    fn parse_rec<'a>(
        &self,
        rest: &'a str,
        ordinal: usize,
        vocab: &[Vec<&str>],
        path: &mut Vec<(String, String)>,
    ) -> bool {
        let Some(level) = self.levels.get(ordinal) else {
            return rest.is_empty();
        };
        let sep = if path.is_empty() {
            ""
        } else {
            level.separator_before.as_str()
        };
        if let Some(after_sep) = rest.strip_prefix(sep) {
            for value in &vocab[ordinal] {
                if let Some(after) = after_sep.strip_prefix(value) {
                    path.push((level.name.clone(), value.to_string()));
                    if self.parse_rec(after, ordinal + 1, vocab, path) {
                        return true;
                    }
                    path.pop();
                }
            }
        }
        if level.optional {
            return self.parse_rec(rest, ordinal + 1, vocab, path);
        }
        false
    }
}

/// Splits a pattern into the leading literal and one separator per level.
/// Placeholders must be `{0}..{n-1}` in order with no trailing literal.
fn parse_pattern(pattern: &str, level_count: usize) -> Result<(String, Vec<String>), DbError> {
    let mut literals = Vec::new();
    let mut current = String::new();
    let mut placeholders = Vec::new();
    let mut chars = pattern.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '{' {
            let mut num = String::new();
            for d in chars.by_ref() {
                if d == '}' {
                    break;
                }
                num.push(d);
            }
            let idx: usize = num
                .parse()
                .map_err(|_| DbError::Schema(format!("bad placeholder '{{{num}}}'")))?;
            placeholders.push(idx);
            literals.push(std::mem::take(&mut current));
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        return Err(DbError::Schema(format!(
            "pattern has trailing literal '{current}'"
        )));
    }
    if placeholders.len() != level_count {
        return Err(DbError::Schema(format!(
            "pattern has {} placeholders but schema declares {} levels",
            placeholders.len(),
            level_count
        )));
    }
    if placeholders.iter().enumerate().any(|(i, &p)| i != p) {
        return Err(DbError::Schema(
            "pattern placeholders must appear in order {0}, {1}, ...".into(),
        ));
    }
    let mut literals = literals.into_iter();
    let leading = literals.next().unwrap_or_default();
    let mut separators = vec![String::new()];
    separators.extend(literals);
    Ok((leading, separators))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn six_level() -> HierarchySchema {
        let levels = [
            ("system", false),
            ("subsystem", false),
            ("device", false),
            ("subdevice", true),
            ("signal", true),
            ("suffix", true),
        ];
        let mut vocab = BTreeMap::new();
        vocab.insert("SP".to_string(), SuffixRole::Setpoint);
        vocab.insert("RB".to_string(), SuffixRole::Readback);
        vocab.insert("CMD".to_string(), SuffixRole::Command);
        HierarchySchema::new(
            "{0}-{1}:{2}:{3}:{4}.{5}",
            levels.iter().map(|(n, o)| (n.to_string(), *o)).collect(),
            vocab,
        )
        .unwrap()
    }

    fn path(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|(l, v)| (l.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn assembles_full_six_level_path() {
        let schema = six_level();
        let p = path(&[
            ("system", "SYS"),
            ("subsystem", "SUB"),
            ("device", "DEV"),
            ("subdevice", "SUBDEV"),
            ("signal", "SIG"),
            ("suffix", "SP"),
        ]);
        assert_eq!(schema.assemble(&p).unwrap(), "SYS-SUB:DEV:SUBDEV:SIG.SP");
    }

    #[test]
    fn omits_trailing_optional_levels() {
        // Device-level channel (firmware-version style): trailing optional
        // segments and their separators disappear.
        let schema = six_level();
        let p = path(&[("system", "MAG"), ("subsystem", "PS"), ("device", "PS01")]);
        assert_eq!(schema.assemble(&p).unwrap(), "MAG-PS:PS01");
    }

    #[test]
    fn empty_optional_value_is_absent() {
        let schema = six_level();
        let p = path(&[
            ("system", "VAC"),
            ("subsystem", "SEC01"),
            ("device", "GC01"),
            ("subdevice", ""),
        ]);
        assert_eq!(schema.assemble(&p).unwrap(), "VAC-SEC01:GC01");
    }

    #[test]
    fn missing_required_level_errors() {
        let schema = six_level();
        let p = path(&[("system", "VAC"), ("device", "GC01")]);
        match schema.assemble(&p) {
            Err(DbError::MissingLevel(l)) => assert_eq!(l, "subsystem"),
            other => panic!("expected MissingLevel, got {other:?}"),
        }
    }

    #[test]
    fn placeholder_count_mismatch_is_schema_error() {
        let err = HierarchySchema::new(
            "{0}-{1}",
            vec![("a".into(), false)],
            BTreeMap::new(),
        )
        .unwrap_err();
        assert!(matches!(err, DbError::Schema(_)));
    }

    #[test]
    fn parse_inverts_assemble_with_vocab() {
        let schema = six_level();
        let vocab: Vec<BTreeSet<String>> = vec![
            ["VAC", "MAG"].iter().map(|s| s.to_string()).collect(),
            ["SEC01", "PS"].iter().map(|s| s.to_string()).collect(),
            ["GC01", "PS01"].iter().map(|s| s.to_string()).collect(),
            ["GAUGE1", "GAUGE10", "FWVER"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            ["PRES"].iter().map(|s| s.to_string()).collect(),
            ["SP", "RB"].iter().map(|s| s.to_string()).collect(),
        ];
        let p = path(&[
            ("system", "VAC"),
            ("subsystem", "SEC01"),
            ("device", "GC01"),
            ("subdevice", "GAUGE10"),
            ("signal", "PRES"),
            ("suffix", "RB"),
        ]);
        let addr = schema.assemble(&p).unwrap();
        assert_eq!(schema.parse_with_vocab(&addr, &vocab), Some(p));

        // Early-terminated path round-trips too.
        let p = path(&[("system", "MAG"), ("subsystem", "PS"), ("device", "PS01")]);
        let addr = schema.assemble(&p).unwrap();
        assert_eq!(schema.parse_with_vocab(&addr, &vocab), Some(p));

        // Mid-skip: value only known at the signal level.
        let p = path(&[
            ("system", "VAC"),
            ("subsystem", "SEC01"),
            ("device", "GC01"),
            ("signal", "PRES"),
        ]);
        let addr = schema.assemble(&p).unwrap();
        assert_eq!(addr, "VAC-SEC01:GC01:PRES");
        assert_eq!(schema.parse_with_vocab(&addr, &vocab), Some(p));
    }

    #[test]
    fn suffix_role_follows_final_component() {
        let schema = six_level();
        let p = path(&[
            ("system", "VAC"),
            ("subsystem", "SEC01"),
            ("device", "GC01"),
            ("subdevice", "GAUGE1"),
            ("signal", "PRES"),
            ("suffix", "SP"),
        ]);
        assert_eq!(schema.suffix_role_of(&p), SuffixRole::Setpoint);
        let p = path(&[("system", "MAG"), ("subsystem", "PS"), ("device", "PS01")]);
        assert_eq!(schema.suffix_role_of(&p), SuffixRole::None);
    }
}
