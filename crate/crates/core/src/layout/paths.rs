//! Static single-robot travel times over (cell, heading) rest states.
//!
//! A move is either a turn in place or a straight rest-to-rest run over any
//! number of cells, so the costs are exact for the stop-turn-go motion model
//! and serve both as estimates for the rules and as the planner heuristic.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{Layout, StationRef};
use crate::motion::Heading;
use crate::CellId;

/// Travel-time restrictions for one search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Search {
    /// Carrying robots may only touch storage locations at the ends of a path.
    pub carrying: bool,
}

/// Time per (cell, heading) state, `f32::INFINITY` when unreachable.
#[derive(Clone, Debug)]
pub struct PathTimes {
    times: Vec<f32>,
}

impl PathTimes {
    pub fn at_heading(&self, c: CellId, h: Heading) -> f64 {
        self.times[c.index() * 4 + h as usize] as f64
    }

    /// Best time over all headings, `None` if unreachable.
    pub fn at(&self, c: CellId) -> Option<f64> {
        let base = c.index() * 4;
        let t = self.times[base..base + 4].iter().fold(f32::INFINITY, |a, &b| a.min(b));
        t.is_finite().then_some(t as f64)
    }
}

#[derive(PartialEq)]
struct Entry(f64, u32);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Layout {
    fn run_costs(&self) -> Vec<f64> {
        let n = self.width.max(self.height) as usize + 1;
        (0..n).map(|k| self.kinematics.rest_to_rest(k as f64 * super::CELL_PITCH)).collect()
    }

    fn gate_ok(&self, c: CellId, goal_station: Option<StationRef>) -> bool {
        match self.cell(c).gated() {
            None => true,
            Some(s) => Some(s) == goal_station,
        }
    }

    /// Whether a robot may pass through `c` without stopping there for good.
    fn passable(&self, c: CellId, search: Search, goal_station: Option<StationRef>) -> bool {
        !(search.carrying && self.cell(c).is_storage()) && self.gate_ok(c, goal_station)
    }

    /// Time from every rest state to `goal`, arriving with any heading.
    pub fn times_to(&self, goal: CellId, search: Search) -> PathTimes {
        let costs = self.run_costs();
        let turn = self.kinematics.full_turn_time / 4.0;
        let goal_station = self.cell(goal).station;
        let mut dist = vec![f64::INFINITY; self.len() * 4];
        let mut heap = BinaryHeap::new();
        for h in 0..4 {
            dist[goal.index() * 4 + h] = 0.0;
            heap.push(Entry(0.0, (goal.index() * 4 + h) as u32));
        }
        while let Some(Entry(d, s)) = heap.pop() {
            let s = s as usize;
            if d > dist[s] {
                continue;
            }
            let c = CellId((s / 4) as u32);
            let h = Heading::from_index(s % 4);
            for q in 1..4 {
                let h2 = Heading::from_index(h as usize + q);
                let nd = d + turn * h2.quarter_turns(h) as f64;
                let ns = c.index() * 4 + h2 as usize;
                if nd < dist[ns] {
                    dist[ns] = nd;
                    heap.push(Entry(nd, ns as u32));
                }
            }
            // A carried pod may start on a storage location but never stop on
            // one mid-path; the same holds for foreign station lanes.
            if c != goal && !self.passable(c, search, goal_station) {
                continue;
            }
            // Predecessor runs end at `c` facing `h`; walk backwards.
            let back = h.opposite();
            let (dx, dy) = back.delta();
            let mut cur = c;
            let mut k = 0;
            loop {
                let w = self.cell(cur);
                let Some(p) = self.at(w.x + dx, w.y + dy) else { break };
                if self.next(p, h) != Some(cur) {
                    break;
                }
                k += 1;
                let nd = d + costs[k];
                let ns = p.index() * 4 + h as usize;
                if nd < dist[ns] {
                    dist[ns] = nd;
                    heap.push(Entry(nd, ns as u32));
                }
                if !self.passable(p, search, goal_station) {
                    break;
                }
                cur = p;
            }
        }
        PathTimes { times: dist.into_iter().map(|d| d as f32).collect() }
    }

    /// Time from `source` (any initial heading) to every rest state. Targets
    /// are assumed to lie outside station entry rows.
    pub fn times_from(&self, source: CellId, search: Search) -> PathTimes {
        let costs = self.run_costs();
        let turn = self.kinematics.full_turn_time / 4.0;
        let mut dist = vec![f64::INFINITY; self.len() * 4];
        let mut heap = BinaryHeap::new();
        for h in 0..4 {
            dist[source.index() * 4 + h] = 0.0;
            heap.push(Entry(0.0, (source.index() * 4 + h) as u32));
        }
        while let Some(Entry(d, s)) = heap.pop() {
            let s = s as usize;
            if d > dist[s] {
                continue;
            }
            let c = CellId((s / 4) as u32);
            let h = Heading::from_index(s % 4);
            if c != source && !self.passable(c, search, None) {
                continue;
            }
            for q in 1..4 {
                let h2 = Heading::from_index(h as usize + q);
                let nd = d + turn * h.quarter_turns(h2) as f64;
                let ns = c.index() * 4 + h2 as usize;
                if nd < dist[ns] {
                    dist[ns] = nd;
                    heap.push(Entry(nd, ns as u32));
                }
            }
            let mut cur = c;
            let mut k = 0;
            while let Some(n) = self.next(cur, h) {
                if !self.gate_ok(n, None) {
                    break;
                }
                k += 1;
                let nd = d + costs[k];
                let ns = n.index() * 4 + h as usize;
                if nd < dist[ns] {
                    dist[ns] = nd;
                    heap.push(Entry(nd, ns as u32));
                }
                if !self.passable(n, search, None) {
                    break;
                }
                cur = n;
            }
        }
        PathTimes { times: dist.into_iter().map(|d| d as f32).collect() }
    }
}

/// Optimal single-robot travel time from `from` to `to` with turn costs, or
/// `None` when no legal path exists. Uncached; runs keep their own caches.
pub fn estimate_path_time(layout: &Layout, from: CellId, to: CellId, carrying: bool) -> Option<f64> {
    if from == to {
        return Some(0.0);
    }
    layout.times_to(to, Search { carrying }).at(from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{build_layout, LayoutConfig, StationKind};
    use crate::motion::KinematicParams;

    fn layout() -> Layout {
        let cfg = LayoutConfig {
            aisles: 3,
            cross_aisles: 3,
            storage_locations: 128,
            pods: 100,
            ..LayoutConfig::default()
        };
        build_layout(&cfg, KinematicParams::default()).unwrap()
    }

    #[test]
    fn zero_for_same_cell() {
        let l = layout();
        let c = l.storage_locations()[5];
        assert_eq!(estimate_path_time(&l, c, c, true), Some(0.0));
    }

    #[test]
    fn straight_run_and_one_turn() {
        let l = layout();
        let k = l.kinematics;
        // Bottom ring runs east; five cells apart is a 4-cell straight run.
        let ox = l.config.buffer_depth as i32 + 1;
        let a = l.at(ox + 1, 0).unwrap();
        let b = l.at(ox + 5, 0).unwrap();
        let t = estimate_path_time(&l, a, b, false).unwrap();
        assert!((t - k.rest_to_rest(4.0)).abs() < 1e-5, "{t}");
        // Along the bottom ring to the south-east corner, then up the right ring.
        let aw = l.config.area_width() as i32;
        let corner_up = l.at(ox + aw - 1, 3).unwrap();
        let start = l.at(ox + aw - 5, 0).unwrap();
        let t = estimate_path_time(&l, start, corner_up, true).unwrap();
        let expect = k.rest_to_rest(4.0) + 0.625 + k.rest_to_rest(3.0);
        assert!((t - expect).abs() < 1e-5, "{t} vs {expect}");
    }

    #[test]
    fn forward_and_reverse_agree() {
        let l = layout();
        let src = l.stations(StationKind::Pick)[0].access;
        for carrying in [false, true] {
            let fwd = l.times_from(src, Search { carrying });
            for &s in l.storage_locations().iter().step_by(7) {
                let rev = estimate_path_time(&l, src, s, carrying).unwrap();
                assert!((fwd.at(s).unwrap() - rev).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn asymmetric_on_one_way_lanes() {
        let l = layout();
        let ox = l.config.buffer_depth as i32 + 1;
        let a = l.at(ox + 1, 0).unwrap();
        let b = l.at(ox + 5, 0).unwrap();
        let ab = estimate_path_time(&l, a, b, false).unwrap();
        let ba = estimate_path_time(&l, b, a, false).unwrap();
        assert!(ba > ab);
    }
}
