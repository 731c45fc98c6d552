//! Engine configuration with spec-pinned defaults.
//!
//! Every tunable threshold lives here so it can be overridden from a
//! single config file rather than edited in code.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Selector calls permitted per query evaluation.
    pub call_budget: u32,
    /// Oracle abstention threshold: best lexical score below this abstains
    /// when abstention is allowed.
    pub abstain_threshold: f64,
    pub direct: DirectConfig,
    pub tree: TreeConfig,
    pub explorer: ExplorerConfig,
    pub mml: MmlConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            call_budget: 32,
            abstain_threshold: 0.15,
            direct: DirectConfig::default(),
            tree: TreeConfig::default(),
            explorer: ExplorerConfig::default(),
            mml: MmlConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DirectConfig {
    /// Maximum record count for whole-dictionary lookup. Databases past
    /// about 1,000 channels already strain the approach; 2,000 leaves
    /// headroom and anything larger is rejected toward tree/explore.
    pub direct_limit: usize,
    /// Validation-retry rounds after semantic matching.
    pub correction_rounds: u32,
    /// When false, single-target queries skip the decomposition stage.
    pub decompose: bool,
    /// Facility glossary prepended to selection context.
    pub glossary: String,
}

impl Default for DirectConfig {
    fn default() -> Self {
        Self {
            direct_limit: 2000,
            correction_rounds: 2,
            decompose: true,
            glossary: String::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    /// Maximum simultaneous selections at one level.
    pub branch_cap: usize,
    /// One backtrack after a dead end before abstaining.
    pub backtrack: bool,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            branch_cap: 4,
            backtrack: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplorerConfig {
    /// Fuzzy-search candidate count.
    pub k: usize,
    /// Property-description weight in fuzzy scoring.
    pub weight_property: f64,
    /// Additive boost weights for facility / device / location matches.
    pub weight_facility: f64,
    pub weight_device: f64,
    pub weight_location: f64,
    /// Hybrid acceptance: take the fuzzy top-1 when its score reaches
    /// this floor and leads rank 2 by the margin below.
    pub satisfied_score: f64,
    pub satisfied_margin: f64,
    pub max_iterations: usize,
}

impl Default for ExplorerConfig {
    fn default() -> Self {
        Self {
            k: 5,
            weight_property: 1.0,
            weight_facility: 0.25,
            weight_device: 0.25,
            weight_location: 0.25,
            satisfied_score: 0.6,
            satisfied_margin: 0.1,
            max_iterations: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MmlConfig {
    /// Examples included in a specialized agent prompt.
    pub example_cap: usize,
    pub max_iterations: usize,
}

impl Default for MmlConfig {
    fn default() -> Self {
        Self {
            example_cap: 8,
            max_iterations: 20,
        }
    }
}

impl EngineConfig {
    pub fn from_yaml(text: &str) -> Result<Self, serde_yaml::Error> {
        serde_yaml::from_str(text)
    }
}
