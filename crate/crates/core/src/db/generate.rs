//! Seeded synthetic database generation.
//!
//! Generated documents are deterministic in the seed and shape parameters.
//! The `scale` knob multiplies only the subdevice range length, so a 10x
//! database keeps the exact tree shape (levels, node kinds, descriptions)
//! of its 1x sibling while its channel count grows by the same factor.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::doc::{DatabaseDoc, ExpandDoc, LevelDoc, NodeDoc, RangeDoc, SchemaDoc};
use super::schema::SuffixRole;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticDbSpec {
    pub systems: usize,
    pub subsystems_per_system: usize,
    pub devices_per_subsystem: usize,
    /// Base subdevice range length, multiplied by `scale`.
    pub subdevices_per_device: usize,
    pub signals_per_subdevice: usize,
    pub suffixes_per_signal: usize,
    pub scale: usize,
}

impl Default for SyntheticDbSpec {
    fn default() -> Self {
        Self {
            systems: 4,
            subsystems_per_system: 2,
            devices_per_subsystem: 3,
            subdevices_per_device: 4,
            signals_per_subdevice: 3,
            suffixes_per_signal: 2,
            scale: 1,
        }
    }
}

impl SyntheticDbSpec {
    /// Exact channel count of the generated database (pure product).
    pub fn channel_count(&self) -> usize {
        self.systems
            * self.subsystems_per_system
            * self.devices_per_subsystem
            * (self.subdevices_per_device * self.scale.max(1))
            * self.signals_per_subdevice
            * self.suffixes_per_signal
    }
}

const SYSTEM_POOL: &[(&str, &str)] = &[
    ("VAC", "vacuum"),
    ("RF", "radio frequency"),
    ("MAG", "magnet"),
    ("DIAG", "beam diagnostics"),
    ("TIM", "timing"),
    ("CRYO", "cryogenics"),
    ("PWR", "electrical power"),
    ("CTL", "controls infrastructure"),
];

const DEVICE_POOL: &[(&str, &str)] = &[
    ("GC", "gauge controller"),
    ("PC", "pump controller"),
    ("PS", "power supply"),
    ("BPM", "beam position monitor"),
    ("CAM", "profile camera"),
    ("CAV", "accelerating cavity"),
    ("TC", "temperature controller"),
    ("FC", "flow controller"),
];

const SIGNAL_POOL: &[(&str, &str)] = &[
    ("PRES", "chamber pressure"),
    ("CURR", "output current"),
    ("VOLT", "supply voltage"),
    ("TEMP", "body temperature"),
    ("FLD", "field strength"),
    ("PHS", "phase angle"),
    ("AMP", "drive amplitude"),
    ("FLOW", "coolant flow"),
    ("POS", "transverse position"),
    ("FREQ", "resonance frequency"),
];

const SUFFIX_POOL: &[(&str, &str, SuffixRole)] = &[
    ("SP", "set point target", SuffixRole::Setpoint),
    ("RB", "readback value", SuffixRole::Readback),
    ("CMD", "command action", SuffixRole::Command),
];

/// Generates a six-level database document. Deterministic in `(spec, seed)`.
pub fn synthetic_db_doc(spec: &SyntheticDbSpec, seed: u64) -> DatabaseDoc {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut systems: Vec<(&str, &str)> = SYSTEM_POOL.to_vec();
    systems.shuffle(&mut rng);
    let mut devices: Vec<(&str, &str)> = DEVICE_POOL.to_vec();
    devices.shuffle(&mut rng);
    let mut signals: Vec<(&str, &str)> = SIGNAL_POOL.to_vec();
    signals.shuffle(&mut rng);

    let n_suffix = spec.suffixes_per_signal.clamp(1, SUFFIX_POOL.len());
    let suffix_leaves: Vec<NodeDoc> = SUFFIX_POOL[..n_suffix]
        .iter()
        .map(|(value, desc, _)| NodeDoc {
            value: value.to_string(),
            description: desc.to_string(),
            name: None,
            metadata: Default::default(),
            children: vec![],
            expand: None,
        })
        .collect();

    let tree = (0..spec.systems)
        .map(|si| {
            let (sys_val, sys_word) = systems[si % systems.len()];
            let subsystems = (0..spec.subsystems_per_system)
                .map(|bi| {
                    let devs = (0..spec.devices_per_subsystem)
                        .map(|di| {
                            let (dev_abbr, dev_word) = devices[(si + bi + di) % devices.len()];
                            let template = (0..spec.signals_per_subdevice)
                                .map(|gi| {
                                    let (sig_val, sig_word) =
                                        signals[(si + di + gi) % signals.len()];
                                    NodeDoc {
                                        value: sig_val.to_string(),
                                        description: sig_word.to_string(),
                                        name: None,
                                        metadata: Default::default(),
                                        children: suffix_leaves.clone(),
                                        expand: None,
                                    }
                                })
                                .collect();
                            NodeDoc {
                                value: format!("{dev_abbr}{:02}", di + 1),
                                description: format!("{dev_word} {}", di + 1),
                                name: None,
                                metadata: Default::default(),
                                children: vec![NodeDoc {
                                    value: String::new(),
                                    description: format!("{dev_word} units"),
                                    name: None,
                                    metadata: Default::default(),
                                    children: vec![],
                                    expand: Some(ExpandDoc {
                                        list: None,
                                        range: Some(RangeDoc {
                                            prefix: "UNIT".to_string(),
                                            lo: 1,
                                            hi: (spec.subdevices_per_device * spec.scale.max(1))
                                                as i64,
                                            pad_width: 0,
                                            description: format!("{dev_word} unit {{n}}"),
                                        }),
                                        each: template,
                                    }),
                                }],
                                expand: None,
                            }
                        })
                        .collect();
                    NodeDoc {
                        value: format!("SEC{:02}", bi + 1),
                        description: format!("{sys_word} sector {}", bi + 1),
                        name: None,
                        metadata: Default::default(),
                        children: devs,
                        expand: None,
                    }
                })
                .collect();
            NodeDoc {
                value: sys_val.to_string(),
                description: format!("{sys_word} system"),
                name: None,
                metadata: Default::default(),
                children: subsystems,
                expand: None,
            }
        })
        .collect();

    DatabaseDoc {
        schema: SchemaDoc {
            pattern: "{0}-{1}:{2}:{3}:{4}.{5}".to_string(),
            levels: [
                ("system", false),
                ("subsystem", false),
                ("device", false),
                ("subdevice", true),
                ("signal", true),
                ("suffix", true),
            ]
            .iter()
            .map(|(name, optional)| LevelDoc {
                name: name.to_string(),
                optional: *optional,
            })
            .collect(),
        },
        suffixes: SUFFIX_POOL[..n_suffix]
            .iter()
            .map(|(value, _, role)| (value.to_string(), *role))
            .collect(),
        tree,
        glossary: String::new(),
    }
}
