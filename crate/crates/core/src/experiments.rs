//! Rule-configuration and scenario enumeration, seeded run plans and result
//! aggregation.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::engine::{run, RunConfig};
pub use crate::engine::WarehouseScenario;
use crate::layout::LayoutConfig;
use crate::metrics::{pearson, MetricsRecord};
use crate::orders::OrderSize;
use crate::rng::derive_seed;
use crate::rules::{PoaRule, PpsRule, PsaRule, RoaRule, RpsRule, RuleConfiguration};

/// Every allowed rule configuration, sorted by rule names in POA, ROA, PPS,
/// RPS, PSA order.
pub fn enumerate_rcs() -> Vec<RuleConfiguration> {
    let mut out = Vec::with_capacity(1620);
    for &poa in PoaRule::ALL {
        for &roa in RoaRule::ALL {
            for &pps in PpsRule::ALL {
                for &rps in RpsRule::ALL {
                    for &psa in PsaRule::ALL {
                        if let Ok(rc) = RuleConfiguration::new(poa, roa, pps, rps, psa) {
                            out.push(rc);
                        }
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| a.names().cmp(&b.names()));
    out
}

/// The scenario grid varied in the second phase.
pub fn enumerate_ws() -> Vec<WarehouseScenario> {
    let mut out = Vec::with_capacity(360);
    for pick_stations in 1..=6 {
        for robots_per_station in 2..=6 {
            for sku_count in [1000, 10000] {
                for return_share in [0.0, 0.3] {
                    for order_size in OrderSize::ALL {
                        out.push(WarehouseScenario { pick_stations, robots_per_station, sku_count, return_share, order_size });
                    }
                }
            }
        }
    }
    out
}

/// Named reference configurations that together use every rule.
pub fn benchmark_rcs() -> [(&'static str, RuleConfiguration); 6] {
    let rc = |a, b, c, d, e| RuleConfiguration::new(a, b, c, d, e).expect("benchmark is allowed");
    [
        ("Demand", rc(PoaRule::DueTime, RoaRule::PodBatch, PpsRule::Demand, RpsRule::LeastDemand, PsaRule::Fixed)),
        ("Speed", rc(PoaRule::FastLane, RoaRule::PodBatch, PpsRule::Lateness, RpsRule::Emptiest, PsaRule::Nearest)),
        ("Nearest", rc(PoaRule::Fcfs, RoaRule::Random, PpsRule::Nearest, RpsRule::Nearest, PsaRule::Nearest)),
        ("Class", rc(PoaRule::CommonLines, RoaRule::PodBatch, PpsRule::Age, RpsRule::Class, PsaRule::Class)),
        ("Greedy", rc(PoaRule::PodMatch, RoaRule::PodBatch, PpsRule::PileOn, RpsRule::Emptiest, PsaRule::StationBased)),
        ("Random", rc(PoaRule::Random, RoaRule::Random, PpsRule::Random, RpsRule::Random, PsaRule::Random)),
    ]
}

pub fn benchmark(name: &str) -> Option<RuleConfiguration> {
    benchmark_rcs().into_iter().find(|(n, _)| *n == name).map(|(_, rc)| rc)
}

/// Seed of one run, independent of execution order.
pub fn run_seed(base: u64, rc_index: usize, ws_index: usize, repetition: u32) -> u64 {
    derive_seed(base, &[rc_index as u64, ws_index as u64, repetition as u64])
}

/// The warehouse of the first phase: the full layout with two pick stations
/// and four robots each.
pub fn phase1_config(horizon: f64) -> RunConfig {
    RunConfig { horizon, ..RunConfig::default() }
}

/// A small warehouse for quick runs: 4×4 storage blocks, 128 locations,
/// 109 pods and 100 SKUs.
pub fn tiny_config(horizon: f64) -> RunConfig {
    let base = RunConfig::default();
    RunConfig {
        layout: LayoutConfig { aisles: 3, cross_aisles: 3, storage_locations: 128, pods: 109, ..base.layout.clone() },
        scenario: WarehouseScenario { sku_count: 100, ..base.scenario },
        horizon,
        ..base
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub phase: u8,
    /// Everything but rules, scenario, seed and repetition.
    pub template: RunConfig,
    pub rcs: Vec<RuleConfiguration>,
    pub scenarios: Vec<WarehouseScenario>,
    pub repetitions: u32,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Job {
    pub rc_index: usize,
    pub ws_index: usize,
    pub repetition: u32,
    pub config: RunConfig,
}

impl ExperimentPlan {
    pub fn len(&self) -> usize {
        self.rcs.len() * self.scenarios.len() * self.repetitions as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Jobs in a fixed order: scenario, then rule configuration, then
    /// repetition.
    pub fn jobs(&self) -> Vec<Job> {
        let mut out = Vec::with_capacity(self.len());
        for (wi, ws) in self.scenarios.iter().enumerate() {
            for (ri, rc) in self.rcs.iter().enumerate() {
                for rep in 0..self.repetitions {
                    out.push(Job {
                        rc_index: ri,
                        ws_index: wi,
                        repetition: rep,
                        config: RunConfig {
                            rules: *rc,
                            scenario: *ws,
                            seed: run_seed(self.seed, ri, wi, rep),
                            repetition: rep,
                            ..self.template.clone()
                        },
                    });
                }
            }
        }
        out
    }
}

/// Named plans. Full-scale phases use 48 h runs and 10 repetitions; the
/// desk presets keep to the small warehouse and 2 h.
pub fn preset(name: &str) -> Option<ExperimentPlan> {
    let bench = || benchmark_rcs().iter().map(|(_, rc)| *rc).collect::<Vec<_>>();
    let plan = |phase, template: RunConfig, rcs, scenarios, repetitions| ExperimentPlan {
        phase,
        scenarios: match scenarios {
            Some(s) => s,
            None => alloc::vec![template.scenario],
        },
        template,
        rcs,
        repetitions,
        seed: 0,
    };
    Some(match name {
        "phase1" => plan(1, phase1_config(48.0 * 3600.0), enumerate_rcs(), None, 10),
        "phase2-benchmarks" => plan(2, phase1_config(48.0 * 3600.0), bench(), Some(enumerate_ws()), 10),
        "phase1-mini" => plan(1, tiny_config(7200.0), enumerate_rcs(), None, 3),
        "phase1-micro" => plan(1, tiny_config(7200.0), bench(), None, 3),
        "phase1-desk" => plan(1, phase1_config(7200.0), bench(), None, 3),
        _ => return None,
    })
}

pub const PRESETS: [&str; 5] = ["phase1", "phase2-benchmarks", "phase1-mini", "phase1-micro", "phase1-desk"];

/// The second-phase rule list: the benchmarks plus the `top` best other
/// configurations by mean score.
pub fn phase2_rcs(summary: &Summary, top: usize) -> Vec<RuleConfiguration> {
    let mut out: Vec<RuleConfiguration> = benchmark_rcs().iter().map(|(_, rc)| *rc).collect();
    for (rc, _) in &summary.rc_means {
        if out.len() >= 6 + top {
            break;
        }
        if !out.contains(rc) {
            out.push(*rc);
        }
    }
    out
}

/// Outcome of one planned run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub rc: RuleConfiguration,
    pub ws: WarehouseScenario,
    pub rc_index: usize,
    pub ws_index: usize,
    pub repetition: u32,
    pub seed: u64,
    pub metrics: Option<MetricsRecord>,
    pub error: Option<String>,
}

pub fn run_job(job: &Job) -> RunRecord {
    let (metrics, error) = match run(&job.config) {
        Ok(o) => (Some(o.metrics), None),
        Err(e) => (None, Some(e.to_string())),
    };
    RunRecord {
        rc: job.config.rules,
        ws: job.config.scenario,
        rc_index: job.rc_index,
        ws_index: job.ws_index,
        repetition: job.repetition,
        seed: job.config.seed,
        metrics,
        error,
    }
}

/// Runs a plan sequentially, handing each record to `sink` as it finishes.
pub fn run_plan(plan: &ExperimentPlan, mut sink: impl FnMut(RunRecord)) {
    for job in plan.jobs() {
        sink(run_job(&job));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleMean {
    pub rule: String,
    pub mean_score: f64,
    pub runs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub problem: String,
    /// Sorted best first.
    pub rules: Vec<RuleMean>,
    /// Best mean over worst mean.
    pub multiplier: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestScore {
    pub ws: WarehouseScenario,
    pub rc: RuleConfiguration,
    pub mean_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub failed: usize,
    pub problems: Vec<ProblemSummary>,
    pub measures: Vec<String>,
    /// Pearson r between measures over all runs; `None` without variance.
    pub correlation: Vec<Vec<Option<f64>>>,
    /// Best mean score per scenario.
    pub best: Vec<BestScore>,
    /// Mean score per rule configuration, best first.
    pub rc_means: Vec<(RuleConfiguration, f64)>,
}

fn ws_key(ws: &WarehouseScenario) -> (u32, u32, u32, u64, OrderSize) {
    (ws.pick_stations, ws.robots_per_station, ws.sku_count, ws.return_share.to_bits(), ws.order_size)
}

fn mean_by<K: Ord + Clone>(items: impl Iterator<Item = (K, f64)>) -> Vec<(K, f64, usize)> {
    let mut v: Vec<(K, f64)> = items.collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(K, f64, usize)> = Vec::new();
    for (k, x) in v {
        match out.last_mut() {
            Some(last) if last.0 == k => {
                last.1 += x;
                last.2 += 1;
            }
            _ => out.push((k, x, 1)),
        }
    }
    for e in &mut out {
        e.1 /= e.2 as f64;
    }
    out
}

/// Aggregates run records. The result does not depend on record order.
pub fn summarize(records: &[RunRecord]) -> Summary {
    let mut ok: Vec<(&RunRecord, &MetricsRecord)> =
        records.iter().filter_map(|r| r.metrics.as_ref().map(|m| (r, m))).collect();
    ok.sort_by(|a, b| {
        (a.0.rc.names(), ws_key(&a.0.ws), a.0.repetition, a.0.seed)
            .cmp(&(b.0.rc.names(), ws_key(&b.0.ws), b.0.repetition, b.0.seed))
            .then(a.1.unit_throughput_score.total_cmp(&b.1.unit_throughput_score))
    });

    let problems = ["POA", "ROA", "PPS", "RPS", "PSA"]
        .iter()
        .enumerate()
        .map(|(p, name)| {
            let mut rules: Vec<RuleMean> = mean_by(ok.iter().map(|(r, m)| (r.rc.names()[p], m.unit_throughput_score)))
                .into_iter()
                .map(|(rule, mean_score, runs)| RuleMean { rule: rule.to_string(), mean_score, runs })
                .collect();
            rules.sort_by(|a, b| b.mean_score.total_cmp(&a.mean_score).then(a.rule.cmp(&b.rule)));
            let multiplier = match (rules.first(), rules.last()) {
                (Some(best), Some(worst)) if worst.mean_score > 0.0 => Some(best.mean_score / worst.mean_score),
                _ => None,
            };
            ProblemSummary { problem: name.to_string(), rules, multiplier }
        })
        .collect();

    let n_measures = 8;
    let names: Vec<String> = MetricsRecord::measures_names()[..n_measures].iter().map(|s| s.to_string()).collect();
    let columns: Vec<Vec<Option<f64>>> =
        (0..n_measures).map(|k| ok.iter().map(|(_, m)| m.measures()[k].1).collect()).collect();
    let correlation = (0..n_measures)
        .map(|i| {
            (0..n_measures)
                .map(|j| {
                    let (xs, ys): (Vec<f64>, Vec<f64>) =
                        columns[i].iter().zip(&columns[j]).filter_map(|(a, b)| Some(((*a)?, (*b)?))).unzip();
                    pearson(&xs, &ys)
                })
                .collect()
        })
        .collect();

    let per_rc_ws = mean_by(ok.iter().map(|(r, m)| ((ws_key(&r.ws), r.rc.names()), m.unit_throughput_score)));
    let mut best: Vec<BestScore> = Vec::new();
    let mut best_key = None;
    for ((wk, names), mean, _) in per_rc_ws {
        let (r, _) = ok.iter().find(|(r, _)| ws_key(&r.ws) == wk && r.rc.names() == names).unwrap();
        if best_key == Some(wk) {
            let b = best.last_mut().unwrap();
            if mean > b.mean_score {
                b.mean_score = mean;
                b.rc = r.rc;
            }
        } else {
            best_key = Some(wk);
            best.push(BestScore { ws: r.ws, rc: r.rc, mean_score: mean });
        }
    }

    let mut rc_means: Vec<(RuleConfiguration, f64)> = mean_by(ok.iter().map(|(r, m)| (r.rc.names(), m.unit_throughput_score)))
        .into_iter()
        .map(|(names, mean, _)| (ok.iter().find(|(r, _)| r.rc.names() == names).unwrap().0.rc, mean))
        .collect();
    rc_means.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.names().cmp(&b.0.names())));

    Summary {
        runs: records.len(),
        failed: records.len() - ok.len(),
        problems,
        measures: names,
        correlation,
        best,
        rc_means,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rc_enumeration() {
        let rcs = enumerate_rcs();
        assert_eq!(rcs.len(), 1620);
        assert!(rcs.iter().all(|rc| !(rc.roa() == RoaRule::PodBatch && rc.rps() == RpsRule::Nearest)));
        assert_eq!(rcs[0].names(), ["CommonLines", "PodBatch", "Age", "Class", "Class"]);
        assert!(rcs.windows(2).all(|w| w[0].names() < w[1].names()));
    }

    #[test]
    fn ws_enumeration() {
        let ws = enumerate_ws();
        assert_eq!(ws.len(), 360);
        assert!(ws.iter().all(|w| w.robots() == w.pick_stations * w.robots_per_station));
    }

    #[test]
    fn benchmarks_cover_every_rule() {
        let b = benchmark_rcs();
        assert_eq!(b[4].1.names(), ["PodMatch", "PodBatch", "PileOn", "Emptiest", "StationBased"]);
        assert!(b[5].1.names().iter().all(|n| *n == "Random"));
        let used = |p: usize, name: &str| b.iter().any(|(_, rc)| rc.names()[p] == name);
        assert!(PoaRule::ALL.iter().all(|r| used(0, r.name())));
        assert!(RoaRule::ALL.iter().all(|r| used(1, r.name())));
        assert!(PpsRule::ALL.iter().all(|r| used(2, r.name())));
        assert!(RpsRule::ALL.iter().all(|r| used(3, r.name())));
        assert!(PsaRule::ALL.iter().all(|r| used(4, r.name())));
    }

    #[test]
    fn seeds_are_distinct_per_repetition() {
        let p = ExperimentPlan { repetitions: 10, ..preset("phase1-micro").unwrap() };
        let mut seeds: Vec<u64> = p.jobs().iter().filter(|j| j.rc_index == 0).map(|j| j.config.seed).collect();
        assert_eq!(seeds.len(), 10);
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 10);
    }

    fn record(rc: RuleConfiguration, score: f64, rep: u32) -> RunRecord {
        let m = MetricsRecord {
            unit_throughput: score * 480.0,
            order_throughput: score * 200.0,
            order_turnover_time: Some(1000.0 - score * 100.0),
            distance_traveled: 500.0 + rep as f64,
            order_offset: Some(-3000.0 + rep as f64),
            late_fraction: Some(0.1),
            pile_on: Some(1.0 + score),
            station_idle_time: 1.0 - score,
            unit_throughput_score: score,
            upper_bound: 480.0,
        };
        RunRecord {
            rc,
            ws: WarehouseScenario::default(),
            rc_index: 0,
            ws_index: 0,
            repetition: rep,
            seed: rep as u64,
            metrics: Some(m),
            error: None,
        }
    }

    #[test]
    fn multiplier_and_dominance() {
        let g = benchmark("Greedy").unwrap();
        let r = g.with_poa(PoaRule::Random);
        let recs = [record(g, 0.8, 0), record(g, 0.8, 1), record(r, 0.4, 0), record(r, 0.4, 1)];
        let s = summarize(&recs);
        let poa = &s.problems[0];
        assert_eq!(poa.rules[0].rule, "PodMatch");
        assert!((poa.multiplier.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(s.problems[1].multiplier, Some(1.0));
        assert_eq!(s.best.len(), 1);
        assert_eq!(s.best[0].rc, g);
        assert_eq!(s.rc_means[0].0, g);
        let idle = s.measures.iter().position(|m| m == "station_idle_time").unwrap();
        assert!((s.correlation[0][idle].unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn phase2_list_has_benchmarks_and_top_four() {
        let rcs = enumerate_rcs();
        let recs: Vec<RunRecord> = rcs.iter().take(20).enumerate().map(|(i, rc)| record(*rc, i as f64 / 20.0, 0)).collect();
        let list = phase2_rcs(&summarize(&recs), 4);
        assert_eq!(list.len(), 10);
        assert!(list.contains(&rcs[19]) && list.contains(&rcs[16]));
    }
}
