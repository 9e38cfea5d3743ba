//! Per-run performance measures, the throughput upper bound and correlations.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::motion::KinematicParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// Units picked per hour.
    pub unit_throughput: f64,
    /// Pick orders completed per hour.
    pub order_throughput: f64,
    /// Mean seconds from submission to completion.
    pub order_turnover_time: Option<f64>,
    /// Mean metres driven per robot.
    pub distance_traveled: f64,
    /// Mean seconds from due time to completion; negative means early.
    pub order_offset: Option<f64>,
    pub late_fraction: Option<f64>,
    /// Units picked per pod visit at a pick station.
    pub pile_on: Option<f64>,
    /// Fraction of the horizon a pick station has no pick in progress,
    /// averaged over pick stations.
    pub station_idle_time: f64,
    pub unit_throughput_score: f64,
    /// Units per hour the stations could at most pick.
    pub upper_bound: f64,
}

impl MetricsRecord {
    pub fn measures_names() -> [&'static str; 9] {
        [
            "unit_throughput",
            "order_throughput",
            "order_turnover_time",
            "distance_traveled",
            "order_offset",
            "late_fraction",
            "pile_on",
            "station_idle_time",
            "unit_throughput_score",
        ]
    }

    /// Names and values of the comparable measures, in a fixed order.
    pub fn measures(&self) -> [(&'static str, Option<f64>); 9] {
        [
            ("unit_throughput", Some(self.unit_throughput)),
            ("order_throughput", Some(self.order_throughput)),
            ("order_turnover_time", self.order_turnover_time),
            ("distance_traveled", Some(self.distance_traveled)),
            ("order_offset", self.order_offset),
            ("late_fraction", self.late_fraction),
            ("pile_on", self.pile_on),
            ("station_idle_time", Some(self.station_idle_time)),
            ("unit_throughput_score", Some(self.unit_throughput_score)),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundTimes {
    /// Seconds the robot is needed per unit.
    pub t_pick: f64,
    /// Seconds the picker is busy per unit.
    pub t_handle: f64,
    pub t_drive_in: f64,
    pub t_turn_out: f64,
    pub t_drive_out: f64,
    /// Estimated picks per pod visit.
    pub ipo: f64,
    pub pick_stations: u32,
}

impl UpperBoundTimes {
    /// Times for the station geometry: one cell into the access point, a
    /// quarter turn, and one cell out.
    pub fn for_stations(kin: &KinematicParams, t_pick: f64, t_handle: f64, pick_stations: u32, ipo: f64) -> Self {
        let one = kin.rest_to_rest(crate::layout::CELL_PITCH);
        Self {
            t_pick,
            t_handle,
            t_drive_in: one,
            t_turn_out: kin.full_turn_time / 4.0,
            t_drive_out: one,
            ipo,
            pick_stations,
        }
    }

    pub fn move_up(&self) -> f64 {
        self.t_drive_in + self.t_turn_out + self.t_drive_out
    }

    /// True when the robot swap hides behind the residual handling time.
    pub fn swap_hidden(&self) -> bool {
        self.t_pick + self.move_up() <= self.t_handle
    }
}

/// Units per hour all pick stations together can at most process.
pub fn upper_bound(t: &UpperBoundTimes) -> f64 {
    let s = t.pick_stations as f64;
    let mu = t.move_up();
    if t.t_pick + mu <= t.t_handle {
        s * 3600.0 / t.t_handle
    } else {
        s * t.ipo * 3600.0 / (t.t_pick + mu - t.t_handle + t.ipo * t.t_handle)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletedOrder {
    pub submit: f64,
    pub due: f64,
    pub completed: f64,
}

/// Raw counts collected during a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub horizon: f64,
    pub units_picked: u64,
    pub pick_pod_visits: u64,
    pub completed: Vec<CompletedOrder>,
    pub robot_distance: Vec<f64>,
    /// Busy seconds per pick station within the horizon.
    pub station_busy: Vec<f64>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| s / n as f64)
}

/// All measures of a finished run. `times.ipo` is replaced by the measured
/// pile-on (at least 1).
pub fn compute_metrics(trace: &RunTrace, times: &UpperBoundTimes) -> MetricsRecord {
    let hours = trace.horizon / 3600.0;
    let per_hour = |x: f64| if hours > 0.0 { x / hours } else { 0.0 };
    let unit_throughput = per_hour(trace.units_picked as f64);
    let pile_on = (trace.pick_pod_visits > 0).then(|| trace.units_picked as f64 / trace.pick_pod_visits as f64);
    let bound_times = UpperBoundTimes { ipo: pile_on.unwrap_or(1.0).max(1.0), ..*times };
    let ub = upper_bound(&bound_times);
    let c = &trace.completed;
    let late = c.iter().filter(|o| o.completed > o.due).count();
    MetricsRecord {
        unit_throughput,
        order_throughput: per_hour(c.len() as f64),
        order_turnover_time: mean(c.iter().map(|o| o.completed - o.submit)),
        distance_traveled: mean(trace.robot_distance.iter().copied()).unwrap_or(0.0),
        order_offset: mean(c.iter().map(|o| o.completed - o.due)),
        late_fraction: (!c.is_empty()).then(|| late as f64 / c.len() as f64),
        pile_on,
        station_idle_time: if trace.horizon > 0.0 {
            mean(trace.station_busy.iter().map(|b| 1.0 - b / trace.horizon)).unwrap_or(1.0)
        } else {
            1.0
        },
        unit_throughput_score: if ub > 0.0 { unit_throughput / ub } else { 0.0 },
        upper_bound: ub,
    }
}

/// Pearson correlation; `None` for fewer than two points or zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn times(mu: f64, ipo: f64) -> UpperBoundTimes {
        UpperBoundTimes {
            t_pick: 8.0,
            t_handle: 15.0,
            t_drive_in: mu,
            t_turn_out: 0.0,
            t_drive_out: 0.0,
            ipo,
            pick_stations: 2,
        }
    }

    #[test]
    fn bound_golden_values() {
        assert!((upper_bound(&times(7.0, 1.0)) - 480.0).abs() < 1e-9);
        assert!((upper_bound(&times(12.0, 3.0)) - 432.0).abs() < 1e-9);
        let limit = upper_bound(&times(12.0, 1e6));
        assert!((limit - 480.0).abs() / 480.0 < 1e-3);
    }

    #[test]
    fn bound_is_continuous_at_case_boundary() {
        for ipo in [1.0, 2.5, 7.0] {
            let at = upper_bound(&times(7.0, ipo));
            let above = upper_bound(&times(7.0 + 1e-12, ipo));
            assert!((at - above).abs() < 1e-9);
        }
    }

    #[test]
    fn station_geometry_bound_is_case_one() {
        let t = UpperBoundTimes::for_stations(&KinematicParams::default(), 8.0, 15.0, 2, 1.0);
        assert!((t.move_up() - (2.0 * 2.0 * libm::sqrt(2.0) + 0.625)).abs() < 1e-12);
        assert!(t.swap_hidden());
        assert!((upper_bound(&t) - 480.0).abs() < 1e-9);
    }

    #[test]
    fn hand_built_trace() {
        let trace = RunTrace {
            horizon: 7200.0,
            units_picked: 12,
            pick_pod_visits: 4,
            completed: alloc::vec![
                CompletedOrder { submit: 0.0, due: 1800.0, completed: 1750.0 },
                CompletedOrder { submit: 100.0, due: 7300.0, completed: 7400.0 },
            ],
            robot_distance: alloc::vec![100.0, 300.0],
            station_busy: alloc::vec![3600.0, 1800.0],
        };
        let t = UpperBoundTimes::for_stations(&KinematicParams::default(), 8.0, 15.0, 2, 1.0);
        let m = compute_metrics(&trace, &t);
        assert_eq!(m.unit_throughput, 6.0);
        assert_eq!(m.order_throughput, 1.0);
        assert_eq!(m.pile_on, Some(3.0));
        assert_eq!(m.order_turnover_time, Some((1750.0 + 7300.0) / 2.0));
        assert_eq!(m.order_offset, Some((-50.0 + 100.0) / 2.0));
        assert_eq!(m.late_fraction, Some(0.5));
        assert_eq!(m.distance_traveled, 200.0);
        assert!((m.station_idle_time - 0.625).abs() < 1e-12);
        assert!((m.unit_throughput_score - 6.0 / 480.0).abs() < 1e-12);
    }

    #[test]
    fn empty_horizon() {
        let m = compute_metrics(&RunTrace::default(), &UpperBoundTimes::for_stations(&KinematicParams::default(), 8.0, 15.0, 1, 1.0));
        assert_eq!(m.unit_throughput, 0.0);
        assert_eq!(m.order_throughput, 0.0);
        assert_eq!(m.unit_throughput_score, 0.0);
        assert_eq!(m.pile_on, None);
    }

    #[test]
    fn pearson_cases() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((pearson(&xs, &xs).unwrap() - 1.0).abs() < 1e-12);
        let ys: Vec<f64> = xs.iter().map(|x| -2.0 * x + 7.0).collect();
        assert!((pearson(&xs, &ys).unwrap() + 1.0).abs() < 1e-12);
        // Covariance 2.0 / 2.5 with both variances 2.5 for the textbook set.
        let ys = [2.0, 1.0, 4.0, 3.0, 5.0];
        assert!((pearson(&xs, &ys).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(pearson(&xs, &[1.0; 5]), None);
        assert_eq!(pearson(&[1.0], &[1.0]), None);
    }
}
