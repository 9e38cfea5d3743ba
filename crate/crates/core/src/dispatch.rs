//! Request/task lifecycle pieces: robot allocation, station timing and the
//! per-robot task state.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::layout::StationRef;
use crate::{CellId, PodId, RobotId};

/// Robots working for pick stations out of `n`: two thirds, halves rounded up.
pub fn pick_share(n: usize) -> usize {
    (4 * n + 3) / 6
}

/// Station per robot. Pick stations get their share first, round-robin over
/// the active stations of each kind; with one kind inactive every robot
/// works for the other.
pub fn allocate_robots(robots: &[RobotId], pick: &[StationRef], repl: &[StationRef]) -> Vec<Option<StationRef>> {
    let n = robots.len();
    let n_pick = match (pick.is_empty(), repl.is_empty()) {
        (true, true) => return alloc::vec![None; n],
        (false, true) => n,
        (true, false) => 0,
        (false, false) => pick_share(n),
    };
    (0..n)
        .map(|k| {
            if k < n_pick {
                Some(pick[k % pick.len()])
            } else {
                Some(repl[(k - n_pick) % repl.len()])
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationTiming {
    /// Seconds the robot is needed per picked unit.
    pub t_pick: f64,
    /// Seconds the picker is busy per unit.
    pub t_handle: f64,
    /// Seconds per replenishment put.
    pub t_put: f64,
}

impl Default for StationTiming {
    fn default() -> Self {
        Self { t_pick: 8.0, t_handle: 15.0, t_put: 20.0 }
    }
}

impl StationTiming {
    /// `(robot release, picker free)` offsets for `units` consecutive picks
    /// from one pod starting with an idle picker.
    pub fn pick_visit(&self, units: u32) -> (f64, f64) {
        if units == 0 {
            return (0.0, 0.0);
        }
        let n = units as f64;
        ((n - 1.0) * self.t_handle + self.t_pick, n * self.t_handle)
    }

    /// Seconds a robot is held for `orders` puts.
    pub fn put_visit(&self, orders: u32) -> f64 {
        orders as f64 * self.t_put
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RequestKind {
    Insertion,
    Extraction,
    Store,
    Idle,
}

/// What a robot is doing. Travel phases carry the goal of the trip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// No task; resting wherever it is.
    Idle,
    /// Driving to a dwell point.
    Dwell { cell: CellId },
    /// Driving to a pod to bring it to `station`.
    Fetch { pod: PodId, station: StationRef },
    Lifting { pod: PodId, station: StationRef },
    /// In the station lane, or waiting outside for a lane slot (`at` = None
    /// and not yet admitted). `at` is the queue position the robot rests on.
    Lane { pod: PodId, station: StationRef, at: Option<usize> },
    /// Pod at the access point being worked on.
    Serving { pod: PodId, station: StationRef },
    /// Returning the pod to `cell`.
    Store { pod: PodId, cell: CellId },
    SettingDown { pod: PodId, cell: CellId },
}

impl Phase {
    pub fn request_kind(&self, station_is_pick: bool) -> RequestKind {
        match self {
            Phase::Idle | Phase::Dwell { .. } => RequestKind::Idle,
            Phase::Store { .. } | Phase::SettingDown { .. } => RequestKind::Store,
            _ if station_is_pick => RequestKind::Extraction,
            _ => RequestKind::Insertion,
        }
    }

    pub fn pod(&self) -> Option<PodId> {
        match *self {
            Phase::Idle | Phase::Dwell { .. } => None,
            Phase::Fetch { pod, .. }
            | Phase::Lifting { pod, .. }
            | Phase::Lane { pod, .. }
            | Phase::Serving { pod, .. }
            | Phase::Store { pod, .. }
            | Phase::SettingDown { pod, .. } => Some(pod),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::StationKind;

    fn st(kind: StationKind, index: u32) -> StationRef {
        StationRef { kind, index }
    }

    #[test]
    fn two_thirds_split() {
        assert_eq!(pick_share(9), 6);
        assert_eq!(pick_share(8), 5);
        assert_eq!(pick_share(6), 4);
        assert_eq!(pick_share(4), 3);
        assert_eq!(pick_share(1), 1);
    }

    #[test]
    fn allocation_spreads_evenly() {
        let robots: Vec<RobotId> = (0..8).map(RobotId).collect();
        let pick = [st(StationKind::Pick, 0), st(StationKind::Pick, 1)];
        let repl = [st(StationKind::Replenishment, 0)];
        let a = allocate_robots(&robots, &pick, &repl);
        let on = |s| a.iter().filter(|x| **x == Some(s)).count();
        assert_eq!(on(pick[0]), 3);
        assert_eq!(on(pick[1]), 2);
        assert_eq!(on(repl[0]), 3);
        let all_pick = allocate_robots(&robots, &pick, &[]);
        assert!(all_pick.iter().all(|s| s.unwrap().kind == StationKind::Pick));
    }

    #[test]
    fn station_timing_examples() {
        let t = StationTiming::default();
        assert_eq!(t.pick_visit(3), (38.0, 45.0));
        assert_eq!(t.pick_visit(1), (8.0, 15.0));
        assert_eq!(t.put_visit(2), 40.0);
    }
}
