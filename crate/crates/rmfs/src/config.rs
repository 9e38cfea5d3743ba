//! TOML run and plan configuration. Every section mirrors a core module and
//! every key defaults to the reference warehouse, so a file only lists what
//! differs. Unknown keys are errors.

use std::path::Path;

use rmfs_core::engine::{RunConfig, SimParams, WarehouseScenario};
use rmfs_core::experiments::{benchmark_rcs, enumerate_rcs, enumerate_ws, preset, ExperimentPlan, PRESETS};
use rmfs_core::layout::LayoutConfig;
use rmfs_core::motion::{KinematicParams, PlannerConfig};
use rmfs_core::orders::OrderParams;
use rmfs_core::rules::RuleConfiguration;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {error}")]
    Io { path: String, error: std::io::Error },
    #[error("{path}: {error}")]
    Parse { path: String, error: toml::de::Error },
    #[error("unknown preset `{0}` (known: {known})", known = PRESETS.join(", "))]
    UnknownPreset(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Simulated seconds.
    pub horizon: f64,
    pub seed: u64,
    pub repetition: u32,
}

impl Default for RunSection {
    fn default() -> Self {
        let d = RunConfig::default();
        Self { horizon: d.horizon, seed: d.seed, repetition: d.repetition }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RcSet {
    /// Only the `[rules]` section.
    Single,
    Benchmarks,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WsSet {
    /// Only the `[scenario]` section.
    Single,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanSection {
    pub phase: u8,
    pub rcs: RcSet,
    pub scenarios: WsSet,
    pub repetitions: u32,
    pub seed: u64,
}

impl Default for PlanSection {
    fn default() -> Self {
        Self { phase: 1, rcs: RcSet::Single, scenarios: WsSet::Single, repetitions: 1, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub layout: LayoutConfig,
    pub kinematics: KinematicParams,
    pub orders: OrderParams,
    pub sim: SimParams,
    pub planner: PlannerConfig,
    pub rules: RuleConfiguration,
    pub scenario: WarehouseScenario,
    pub run: RunSection,
    pub plan: PlanSection,
}

impl Default for FileConfig {
    fn default() -> Self {
        let d = RunConfig::default();
        Self {
            layout: d.layout,
            kinematics: d.kinematics,
            orders: d.orders,
            sim: d.sim,
            planner: d.planner,
            rules: d.rules,
            scenario: d.scenario,
            run: RunSection::default(),
            plan: PlanSection::default(),
        }
    }
}

impl FileConfig {
    pub fn parse(text: &str, path: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|error| ConfigError::Parse { path: path.into(), error })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|error| ConfigError::Io { path: p.clone(), error })?;
        Self::parse(&text, &p)
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            layout: self.layout.clone(),
            kinematics: self.kinematics,
            orders: self.orders.clone(),
            sim: self.sim.clone(),
            planner: self.planner,
            rules: self.rules,
            scenario: self.scenario,
            horizon: self.run.horizon,
            seed: self.run.seed,
            repetition: self.run.repetition,
        }
    }

    pub fn plan(&self) -> ExperimentPlan {
        let p = &self.plan;
        ExperimentPlan {
            phase: p.phase,
            template: self.run_config(),
            rcs: match p.rcs {
                RcSet::Single => vec![self.rules],
                RcSet::Benchmarks => benchmark_rcs().iter().map(|(_, rc)| *rc).collect(),
                RcSet::All => enumerate_rcs(),
            },
            scenarios: match p.scenarios {
                WsSet::Single => vec![self.scenario],
                WsSet::All => enumerate_ws(),
            },
            repetitions: p.repetitions,
            seed: p.seed,
        }
    }
}

pub fn load_preset(name: &str) -> Result<ExperimentPlan, ConfigError> {
    preset(name).ok_or_else(|| ConfigError::UnknownPreset(name.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_reference_warehouse() {
        let c = FileConfig::parse("", "x").unwrap();
        assert_eq!(c.run_config(), RunConfig::default());
    }

    #[test]
    fn sections_override_defaults() {
        let text = r#"
            [layout]
            aisles = 3
            [rules]
            poa = "Random"
            roa = "Random"
            pps = "Nearest"
            rps = "Nearest"
            psa = "Fixed"
            [scenario]
            order_size = "Large"
            [run]
            horizon = 600.0
            [plan]
            rcs = "benchmarks"
            repetitions = 2
        "#;
        let c = FileConfig::parse(text, "x").unwrap();
        assert_eq!(c.layout.aisles, 3);
        assert_eq!(c.rules.names()[3], "Nearest");
        assert_eq!(c.run_config().horizon, 600.0);
        assert_eq!(c.plan().len(), 12);
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let err = FileConfig::parse("[layout]\naisles = 3\nasles = 4\n", "bad.toml").unwrap_err().to_string();
        assert!(err.contains("asles"), "{err}");
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn forbidden_rule_pair_is_rejected() {
        let text = "[rules]\npoa = \"FCFS\"\nroa = \"PodBatch\"\npps = \"Age\"\nrps = \"Nearest\"\npsa = \"Fixed\"\n";
        assert!(FileConfig::parse(text, "x").is_err());
    }
}
