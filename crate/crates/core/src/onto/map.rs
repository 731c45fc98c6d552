//! Mapping channel databases into the knowledge graph.
//!
//! A mapping assigns each device family a class from the shared ontology
//! and each suffix role a signal-role predicate. Every channel record then
//! materializes three facts: the device's type, the device-signal link,
//! and the role-specific link. Differently-mapped facilities end up
//! speaking the same semantic language, which is what makes a single query
//! template portable.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::db::{ChannelDatabase, SuffixRole};

use super::{OntoError, Triple, TripleStore};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassRule {
    /// Matches device values by prefix; an exact value is a full prefix.
    pub prefix: String,
    pub class: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphMapping {
    /// Level whose value identifies the device (e.g. "device").
    pub device_level: String,
    pub classes: Vec<ClassRule>,
    /// Suffix role name (setpoint/readback/command/status/none) to
    /// signal-role predicate.
    #[serde(default)]
    pub roles: BTreeMap<String, String>,
    #[serde(default = "default_type_predicate")]
    pub type_predicate: String,
    #[serde(default = "default_signal_predicate")]
    pub signal_predicate: String,
}

fn default_type_predicate() -> String {
    "rdf:type".to_string()
}

fn default_signal_predicate() -> String {
    "acc:hasSignal".to_string()
}

impl GraphMapping {
    pub fn load_str(text: &str) -> Result<Self, OntoError> {
        serde_yaml::from_str(text).map_err(|e| OntoError::Config(format!("mapping: {e}")))
    }

    fn role_predicate(&self, role: SuffixRole) -> String {
        let key = role.to_string();
        self.roles.get(&key).cloned().unwrap_or_else(|| {
            match role {
                SuffixRole::Setpoint => "acc:hasSetpoint",
                SuffixRole::Readback => "acc:hasReadback",
                SuffixRole::Command => "acc:hasCommand",
                SuffixRole::Status => "acc:hasStatus",
                SuffixRole::None => "acc:hasChannel",
            }
            .to_string()
        })
    }
}

/// Materializes the core ontology plus three triples per channel record:
/// `(device, type, class)`, `(device, has-signal, channel)`, and
/// `(device, role-predicate, channel)`. Deterministic in record order;
/// duplicates collapse only later, when the list is loaded into a store.
pub fn map_channels_to_graph(
    db: &ChannelDatabase,
    mapping: &GraphMapping,
    core: &TripleStore,
) -> Result<Vec<Triple>, OntoError> {
    let mut out: Vec<Triple> = core.triples().to_vec();
    let device_ordinal = db
        .schema()
        .level_named(&mapping.device_level)
        .map(|l| l.ordinal);
    for record in db.records() {
        let Some(device_value) = record.level_value(&mapping.device_level) else {
            return Err(OntoError::UnmappedFamily(format!(
                "record {} has no '{}' level",
                record.address, mapping.device_level
            )));
        };
        let rule = mapping
            .classes
            .iter()
            .find(|r| device_value.starts_with(&r.prefix))
            .ok_or_else(|| OntoError::UnmappedFamily(device_value.to_string()))?;
        // The device term is the address prefix up to the device level.
        let device_path: Vec<(String, String)> = record
            .path
            .iter()
            .take_while(|(level, _)| {
                db.schema()
                    .level_named(level)
                    .zip(device_ordinal)
                    .map(|(l, d)| l.ordinal <= d)
                    .unwrap_or(false)
            })
            .cloned()
            .collect();
        let device_term = db
            .schema()
            .assemble(&device_path)
            .map_err(|e| OntoError::Config(format!("device term for {}: {e}", record.address)))?;
        out.push(Triple::new(&device_term, &mapping.type_predicate, &rule.class));
        out.push(Triple::new(
            &device_term,
            &mapping.signal_predicate,
            &record.address,
        ));
        out.push(Triple::new(
            &device_term,
            mapping.role_predicate(record.suffix_role),
            &record.address,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::onto::load_graph;

    const CORE: &str = r#"
acc:Magnet rdfs:subClassOf acc:Device .
acc:Quadrupole rdfs:subClassOf acc:Magnet .
acc:Corrector rdfs:subClassOf acc:Magnet .
"#;

    const DB: &str = r#"
schema:
  pattern: "{0}:{1}:{2}"
  levels:
    - { name: area }
    - { name: device }
    - { name: suffix, optional: true }
suffixes: { SP: setpoint, RB: readback }
tree:
  - value: R1
    description: ring one
    children:
      - value: QF1
        description: focusing quadrupole
        children:
          - { value: SP, description: current set point }
          - { value: RB, description: current readback }
      - value: COR1
        description: orbit corrector
        children:
          - { value: SP, description: strength set point }
"#;

    fn mapping() -> GraphMapping {
        GraphMapping {
            device_level: "device".into(),
            classes: vec![
                ClassRule {
                    prefix: "QF".into(),
                    class: "acc:Quadrupole".into(),
                },
                ClassRule {
                    prefix: "COR".into(),
                    class: "acc:Corrector".into(),
                },
            ],
            roles: BTreeMap::new(),
            type_predicate: default_type_predicate(),
            signal_predicate: default_signal_predicate(),
        }
    }

    #[test]
    fn quadrupole_record_yields_type_and_role_triples() {
        let db = ChannelDatabase::load_str(DB).unwrap();
        let core = load_graph(CORE).unwrap();
        let triples = map_channels_to_graph(&db, &mapping(), &core).unwrap();
        assert!(triples.contains(&Triple::new("R1:QF1", "rdf:type", "acc:Quadrupole")));
        assert!(triples.contains(&Triple::new("R1:QF1", "acc:hasSignal", "R1:QF1:SP")));
        assert!(triples.contains(&Triple::new("R1:QF1", "acc:hasSetpoint", "R1:QF1:SP")));
        assert!(triples.contains(&Triple::new("R1:QF1", "acc:hasReadback", "R1:QF1:RB")));
        // Subclass facts ride along from the core ontology.
        assert!(triples.contains(&Triple::new("acc:Quadrupole", "rdfs:subClassOf", "acc:Magnet")));
    }

    #[test]
    fn empty_database_yields_core_triples_only() {
        let db = ChannelDatabase::from_flat_records(vec![]).unwrap();
        let core = load_graph(CORE).unwrap();
        let mapping = GraphMapping {
            device_level: "address".into(),
            classes: vec![],
            roles: BTreeMap::new(),
            type_predicate: default_type_predicate(),
            signal_predicate: default_signal_predicate(),
        };
        let triples = map_channels_to_graph(&db, &mapping, &core).unwrap();
        assert_eq!(triples.len(), core.len());
    }

    #[test]
    fn triple_count_is_three_per_record_plus_core() {
        let db = ChannelDatabase::load_str(DB).unwrap();
        let core = load_graph(CORE).unwrap();
        let triples = map_channels_to_graph(&db, &mapping(), &core).unwrap();
        assert_eq!(triples.len(), core.len() + 3 * db.len());
    }

    #[test]
    fn unmapped_family_is_an_error() {
        let db = ChannelDatabase::load_str(DB).unwrap();
        let core = load_graph(CORE).unwrap();
        let mut m = mapping();
        m.classes.pop();
        assert!(matches!(
            map_channels_to_graph(&db, &m, &core),
            Err(OntoError::UnmappedFamily(v)) if v == "COR1"
        ));
    }
}
