//! Event-driven run loop.
//!
//! A run owns its layout, stock, orders and robots and advances a single
//! clock through a heap of timed events. Every decision rule is consulted at
//! the moment its trigger fires; robots plan conflict-free paths against the
//! reservations of all robots that planned before them.

mod sim;
mod trace;

use alloc::string::String;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::StationTiming;
use crate::inventory::InventoryError;
use crate::layout::{LayoutConfig, LayoutError};
use crate::metrics::{MetricsRecord, RunTrace};
use crate::motion::{KinematicParams, PlanError, PlannerConfig};
use crate::orders::{OrderError, OrderParams, OrderSize};
use crate::rules::{PoaRule, PpsRule, PsaRule, RoaRule, RpsRule, RuleConfiguration};
use crate::{CellId, RobotId};

pub use trace::{fnv1a, TraceEvent, TraceSink};

/// The varied part of a warehouse: stations, fleet, assortment and demand.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WarehouseScenario {
    pub pick_stations: u32,
    pub robots_per_station: u32,
    pub sku_count: u32,
    /// Share of replenishment orders that are single-unit returns.
    pub return_share: f64,
    pub order_size: OrderSize,
}

impl Default for WarehouseScenario {
    fn default() -> Self {
        Self { pick_stations: 2, robots_per_station: 4, sku_count: 1000, return_share: 0.0, order_size: OrderSize::Mixed }
    }
}

impl WarehouseScenario {
    pub fn robots(&self) -> u32 {
        self.pick_stations * self.robots_per_station
    }
}

/// Operating parameters that are not part of the layout or order stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    pub pod_capacity: u32,
    pub unit_size_min: u32,
    pub unit_size_max: u32,
    /// Rate of the exponential SKU popularity weights.
    pub popularity_lambda: f64,
    pub initial_utilization: f64,
    /// Order slots per pick station.
    pub pick_station_capacity: u32,
    /// Slot volume per replenishment station; twice the pod capacity if unset.
    pub repl_station_capacity: Option<u32>,
    pub timing: StationTiming,
    /// Cumulative shares bounding the storage classes.
    pub class_bounds: [f64; 3],
    /// Consecutive failed plans a robot may accumulate before the run aborts.
    pub retry_budget: u32,
    /// Seconds between retries of a failed plan.
    pub retry_delay: f64,
    /// Seconds between ledger consistency checks.
    pub check_interval: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            pod_capacity: 500,
            unit_size_min: 2,
            unit_size_max: 8,
            popularity_lambda: 0.5,
            initial_utilization: 0.7,
            pick_station_capacity: 8,
            repl_station_capacity: None,
            timing: StationTiming::default(),
            class_bounds: [0.1, 0.3, 1.0],
            retry_budget: 4000,
            retry_delay: 0.5,
            check_interval: 3600.0,
        }
    }
}

impl SimParams {
    pub fn repl_capacity(&self) -> u32 {
        self.repl_station_capacity.unwrap_or(2 * self.pod_capacity)
    }
}

/// Everything a run depends on. Equal configs give bit-identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub layout: LayoutConfig,
    pub kinematics: KinematicParams,
    pub orders: OrderParams,
    pub sim: SimParams,
    pub planner: PlannerConfig,
    pub rules: RuleConfiguration,
    pub scenario: WarehouseScenario,
    /// Simulated seconds.
    pub horizon: f64,
    pub seed: u64,
    pub repetition: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            layout: LayoutConfig::default(),
            kinematics: KinematicParams::default(),
            orders: OrderParams::default(),
            sim: SimParams::default(),
            planner: PlannerConfig::default(),
            rules: RuleConfiguration::new(
                PoaRule::PodMatch,
                RoaRule::PodBatch,
                PpsRule::PileOn,
                RpsRule::Emptiest,
                PsaRule::StationBased,
            )
            .unwrap(),
            scenario: WarehouseScenario::default(),
            horizon: 48.0 * 3600.0,
            seed: 0,
            repetition: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub events: u64,
    pub units_picked: u64,
    pub units_put: u64,
    pub pick_pod_visits: u64,
    pub repl_pod_visits: u64,
    pub orders_completed: u64,
    pub repl_orders_stored: u64,
    pub plans: u64,
    pub plan_failures: u64,
    pub planner_expansions: u64,
    /// Class storage that had to use a neighbouring class.
    pub class_fallbacks: u64,
    pub pause_toggles: u64,
    pub final_utilization: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub metrics: MetricsRecord,
    pub stats: RunStats,
    pub trace: RunTrace,
    /// FNV-1a over the event trace.
    pub trace_hash: u64,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SimError {
    #[error("layout: {0}")]
    Layout(#[from] LayoutError),
    #[error("orders: {0}")]
    Orders(#[from] OrderError),
    #[error("inventory: {0}")]
    Inventory(#[from] InventoryError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("robot {robot} could not plan from {from} to {goal} after {attempts} attempts at t={time:.1}s: {cause}")]
    Livelock { robot: RobotId, from: CellId, goal: CellId, attempts: u32, time: f64, cause: PlanError },
    #[error("invariant violated at t={time:.1}s: {what}")]
    Invariant { time: f64, what: &'static str },
}

/// Simulates `config` from time zero to its horizon.
pub fn run(config: &RunConfig) -> Result<RunOutcome, SimError> {
    sim::Sim::new(config, None)?.run()
}

/// Like [`run`], also feeding every trace event to `sink`.
pub fn run_traced(config: &RunConfig, sink: &mut dyn TraceSink) -> Result<RunOutcome, SimError> {
    sim::Sim::new(config, Some(sink))?.run()
}
