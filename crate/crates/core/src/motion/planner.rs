//! Cooperative space-time A* over rest states.
//!
//! Each robot plans its whole path against the holds of every robot that
//! planned before it and then reserves that path. A robot occupies the cells
//! it leaves and enters during a straight run, rests on its goal with an
//! open-ended hold, and only ever rests indefinitely on storage locations or
//! station lanes. Plans that would need more than `window` seconds of delay
//! beyond the static optimum are rejected; the caller retries later.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec::Vec;
use core::cmp::Ordering;

use hashbrown::{HashMap, HashSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::reservation::{slice_of, slice_range, ReservationTable, OPEN, SLICE};
use super::Heading;
use crate::layout::{Layout, PathTimes, Search, CELL_PITCH};
use crate::{CellId, RobotId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("no legal path from {from} to {to}")]
    Unreachable { from: CellId, to: CellId },
    #[error("goal {goal} is held by robot {holder}")]
    GoalHeld { goal: CellId, holder: RobotId },
    #[error("no conflict-free path within the planning window")]
    Window,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Move {
    Wait { cell: CellId, from: f64, to: f64 },
    Turn { cell: CellId, heading: Heading, from: f64, to: f64 },
    /// Rest-to-rest straight run; `cells[0]` is the starting cell.
    Run { cells: Vec<CellId>, heading: Heading, from: f64, to: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimedPath {
    pub start: f64,
    pub end: f64,
    pub goal: CellId,
    pub heading: Heading,
    pub moves: Vec<Move>,
    /// Metres driven.
    pub distance: f64,
    /// Cell holds in seconds; the last one is open-ended at the goal.
    pub holds: Vec<(CellId, f64, f64)>,
}

impl TimedPath {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    /// `(cell, arrival)` for every cell entered, in order.
    pub fn arrivals(&self, layout: &Layout) -> Vec<(CellId, f64)> {
        let mut out = Vec::new();
        for m in &self.moves {
            if let Move::Run { cells, from, .. } = m {
                let k = cells.len() - 1;
                let total = k as f64 * CELL_PITCH;
                for (j, &c) in cells.iter().enumerate().skip(1) {
                    out.push((c, from + layout.kinematics.time_at(total, j as f64 * CELL_PITCH)));
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PlanRequest {
    pub robot: RobotId,
    pub start: CellId,
    pub heading: Heading,
    pub t0: f64,
    pub goal: CellId,
    pub carrying: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    /// Tolerated delay over the static optimum, in seconds.
    pub window: f64,
    /// Expansion cap per search.
    pub max_expansions: usize,
    /// Cached heuristic tables.
    pub cache_size: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self { window: 20.0, max_expansions: 60_000, cache_size: 256 }
    }
}

#[derive(Clone, Copy)]
enum Action {
    Start,
    Wait,
    Turn,
    Run(u16),
}

#[derive(Clone, Copy)]
struct Node {
    cell: CellId,
    heading: Heading,
    t: f64,
    parent: u32,
    action: Action,
}

#[derive(PartialEq)]
struct Open(f64, f64, u32);

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, o: &Self) -> Ordering {
        // Min f, then the later (deeper) node, then insertion order.
        o.0.total_cmp(&self.0)
            .then_with(|| self.1.total_cmp(&o.1))
            .then_with(|| o.2.cmp(&self.2))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Path planner with a per-run cache of heuristic tables.
#[derive(Clone, Debug)]
pub struct Planner {
    pub config: PlannerConfig,
    cache: HashMap<(CellId, bool), PathTimes>,
    order: VecDeque<(CellId, bool)>,
    pub expansions: u64,
}

impl Planner {
    pub fn new(config: PlannerConfig) -> Self {
        Self { config, cache: HashMap::new(), order: VecDeque::new(), expansions: 0 }
    }

    /// Static times to `goal`, cached.
    pub fn times_to(&mut self, layout: &Layout, goal: CellId, carrying: bool) -> &PathTimes {
        let key = (goal, carrying);
        if !self.cache.contains_key(&key) {
            if self.order.len() >= self.config.cache_size.max(1) {
                if let Some(old) = self.order.pop_front() {
                    self.cache.remove(&old);
                }
            }
            self.cache.insert(key, layout.times_to(goal, Search { carrying }));
            self.order.push_back(key);
        }
        &self.cache[&key]
    }

    /// Static estimate honouring the robot's current heading.
    pub fn estimate(&mut self, layout: &Layout, from: CellId, heading: Heading, to: CellId, carrying: bool) -> Option<f64> {
        let t = self.times_to(layout, to, carrying).at_heading(from, heading);
        t.is_finite().then_some(t)
    }

    /// Plans a conflict-free path and reserves it on success. On failure the
    /// table is left untouched.
    pub fn plan(&mut self, layout: &Layout, table: &mut ReservationTable, req: PlanRequest) -> Result<TimedPath, PlanError> {
        let path = self.search(layout, table, req)?;
        table.release(req.robot);
        for &(c, a, b) in &path.holds {
            let (s, e) = if b.is_infinite() { (slice_of(a), OPEN) } else { slice_range(a, b) };
            table.reserve(c, req.robot, s, e);
        }
        Ok(path)
    }

    /// Searches without reserving.
    pub fn search(&mut self, layout: &Layout, table: &ReservationTable, req: PlanRequest) -> Result<TimedPath, PlanError> {
        let PlanRequest { robot, start, heading, t0, goal, carrying } = req;
        if let Some(h) = table.open_holder(goal, robot) {
            return Err(PlanError::GoalHeld { goal, holder: h.robot });
        }
        let kin = layout.kinematics;
        let turn_q = kin.full_turn_time / 4.0;
        let goal_station = layout.cell(goal).station;
        let free = |c: CellId, a: f64, b: f64| {
            let (s, e) = slice_range(a, b);
            table.is_free(c, s, e, robot)
        };
        let rests_at_goal = |t: f64| table.is_free(goal, slice_of(t), OPEN, robot);

        let h0 = {
            let times = self.times_to(layout, goal, carrying);
            times.at_heading(start, heading)
        };
        if !h0.is_finite() {
            return Err(PlanError::Unreachable { from: start, to: goal });
        }
        let times = &self.cache[&(goal, carrying)];
        let deadline = t0 + h0 + self.config.window;

        let passable = |c: CellId| {
            let w = layout.cell(c);
            !(carrying && w.is_storage()) && w.gated().map_or(true, |s| Some(s) == goal_station)
        };

        let mut nodes: Vec<Node> = Vec::new();
        let mut open = BinaryHeap::new();
        let mut closed: HashSet<(u32, u8, u32)> = HashSet::new();
        nodes.push(Node { cell: start, heading, t: t0, parent: u32::MAX, action: Action::Start });
        open.push(Open(t0 + h0, t0, 0));

        let mut found = None;
        let mut expanded = 0usize;
        while let Some(Open(_, _, idx)) = open.pop() {
            let n = nodes[idx as usize];
            if !closed.insert((n.cell.0, n.heading as u8, slice_of(n.t))) {
                continue;
            }
            expanded += 1;
            if expanded > self.config.max_expansions {
                break;
            }
            if n.cell == goal && rests_at_goal(n.t) {
                found = Some(idx);
                break;
            }
            // Non-passable cells other than the start are dead ends for
            // through traffic.
            if n.cell != start && n.cell != goal && !passable(n.cell) {
                continue;
            }
            let mut push = |nodes: &mut Vec<Node>, node: Node| {
                let h = times.at_heading(node.cell, node.heading);
                let f = node.t + h;
                if h.is_finite() && f <= deadline + 1e-9 {
                    nodes.push(node);
                    open.push(Open(f, node.t, (nodes.len() - 1) as u32));
                }
            };
            if free(n.cell, n.t, n.t + SLICE) {
                push(&mut nodes, Node { t: n.t + SLICE, parent: idx, action: Action::Wait, ..n });
            }
            for q in 1..4 {
                let h2 = Heading::from_index(n.heading as usize + q);
                let d = turn_q * n.heading.quarter_turns(h2) as f64;
                if free(n.cell, n.t, n.t + d) {
                    push(&mut nodes, Node { heading: h2, t: n.t + d, parent: idx, action: Action::Turn, ..n });
                }
            }
            // Straight runs, stopping where a turn is possible, at the goal,
            // or where the lane ends.
            let mut cells = Vec::new();
            cells.push(n.cell);
            let mut cur = n.cell;
            while let Some(next) = layout.next(cur, n.heading) {
                let w = layout.cell(next);
                if let Some(s) = w.gated() {
                    if Some(s) != goal_station {
                        break;
                    }
                }
                if carrying && w.is_storage() && next != goal {
                    break;
                }
                cells.push(next);
                let k = cells.len() - 1;
                let stop_here = next == goal
                    || layout.next(next, n.heading).is_none()
                    || w.out.iter().enumerate().any(|(hi, o)| o.is_some() && hi != n.heading as usize)
                    || (carrying && layout.next(next, n.heading).is_some_and(|a| layout.cell(a).is_storage() && a != goal));
                if stop_here {
                    let total = k as f64 * CELL_PITCH;
                    let tau = |j: usize| n.t + kin.time_at(total, j as f64 * CELL_PITCH);
                    let end = tau(k);
                    let ok = (0..=k).all(|j| {
                        let a = if j == 0 { n.t } else { tau(j - 1) };
                        let b = if j == k { end } else { tau(j + 1) };
                        free(cells[j], a, b)
                    });
                    if ok {
                        push(&mut nodes, Node { cell: next, t: end, parent: idx, action: Action::Run(k as u16), ..n });
                    }
                }
                if !passable(next) {
                    break;
                }
                cur = next;
            }
        }
        self.expansions += expanded as u64;
        let Some(mut idx) = found else { return Err(PlanError::Window) };

        let mut chain = Vec::new();
        while idx != u32::MAX {
            chain.push(idx);
            idx = nodes[idx as usize].parent;
        }
        chain.reverse();
        let mut moves = Vec::new();
        let mut holds = Vec::new();
        let mut distance = 0.0;
        for pair in chain.windows(2) {
            let (p, n) = (nodes[pair[0] as usize], nodes[pair[1] as usize]);
            match n.action {
                Action::Wait => {
                    moves.push(Move::Wait { cell: p.cell, from: p.t, to: n.t });
                    holds.push((p.cell, p.t, n.t));
                }
                Action::Turn => {
                    moves.push(Move::Turn { cell: p.cell, heading: n.heading, from: p.t, to: n.t });
                    holds.push((p.cell, p.t, n.t));
                }
                Action::Run(k) => {
                    let k = k as usize;
                    let mut cells = Vec::with_capacity(k + 1);
                    cells.push(p.cell);
                    for _ in 0..k {
                        let c = *cells.last().unwrap();
                        cells.push(layout.next(c, p.heading).unwrap());
                    }
                    let total = k as f64 * CELL_PITCH;
                    let tau = |j: usize| p.t + kin.time_at(total, j as f64 * CELL_PITCH);
                    for j in 0..=k {
                        let a = if j == 0 { p.t } else { tau(j - 1) };
                        let b = if j == k { n.t } else { tau(j + 1) };
                        holds.push((cells[j], a, b));
                    }
                    distance += total;
                    moves.push(Move::Run { cells, heading: p.heading, from: p.t, to: n.t });
                }
                Action::Start => unreachable!(),
            }
        }
        let last = nodes[*chain.last().unwrap() as usize];
        holds.push((goal, last.t, f64::INFINITY));
        Ok(TimedPath { start: t0, end: last.t, goal, heading: last.heading, moves, distance, holds })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{build_layout, estimate_path_time, LayoutConfig};
    use crate::motion::KinematicParams;

    fn layout() -> Layout {
        let cfg = LayoutConfig { aisles: 3, cross_aisles: 3, storage_locations: 128, pods: 100, ..LayoutConfig::default() };
        build_layout(&cfg, KinematicParams::default()).unwrap()
    }

    fn req(robot: u32, start: CellId, heading: Heading, goal: CellId) -> PlanRequest {
        PlanRequest { robot: RobotId(robot), start, heading, t0: 0.0, goal, carrying: false }
    }

    #[test]
    fn goal_equals_start() {
        let l = layout();
        let mut t = ReservationTable::new(l.len(), 2);
        let mut p = Planner::new(PlannerConfig::default());
        let s = l.storage_locations()[0];
        let path = p.plan(&l, &mut t, req(0, s, Heading::North, s)).unwrap();
        assert!(path.moves.is_empty());
        assert_eq!(path.duration(), 0.0);
    }

    #[test]
    fn corridor_matches_closed_form() {
        let l = layout();
        let ox = l.config.buffer_depth as i32 + 1;
        // Five consecutive ring cells along the bottom edge.
        let a = l.at(ox + 1, 0).unwrap();
        let b = l.at(ox + 5, 0).unwrap();
        let mut t = ReservationTable::new(l.len(), 1);
        let mut p = Planner::new(PlannerConfig::default());
        let path = p.plan(&l, &mut t, req(0, a, Heading::East, b)).unwrap();
        assert!((path.duration() - l.kinematics.rest_to_rest(4.0)).abs() < 1e-9);
        assert_eq!(path.distance, 4.0);
    }

    #[test]
    fn single_robot_plans_are_optimal() {
        let l = layout();
        let mut p = Planner::new(PlannerConfig::default());
        let t = ReservationTable::new(l.len(), 1);
        let s = l.storage_locations();
        for (i, &a) in s.iter().enumerate().step_by(11) {
            let b = s[(i * 7 + 3) % s.len()];
            let path = p.search(&l, &t, PlanRequest { carrying: true, ..req(0, a, Heading::North, b) }).unwrap();
            let est = p.estimate(&l, a, Heading::North, b, true).unwrap();
            assert!((path.duration() - est).abs() < 1e-4, "{} vs {}", path.duration(), est);
            assert!(path.duration() + 1e-4 >= estimate_path_time(&l, a, b, true).unwrap());
        }
    }

    #[test]
    fn head_on_meeting_waits_or_detours() {
        let l = layout();
        let ox = l.config.buffer_depth as i32 + 1;
        let c = |x: i32, y: i32| l.at(ox + x, y).unwrap();
        let mut t = ReservationTable::new(l.len(), 2);
        let mut p = Planner::new(PlannerConfig::default());
        t.reserve(c(1, 1), RobotId(0), 0, OPEN);
        t.reserve(c(4, 1), RobotId(1), 0, OPEN);
        // Robot 0 drives east along the pod row and parks at (3, 1).
        let r0 = p.plan(&l, &mut t, req(0, c(1, 1), Heading::East, c(3, 1))).unwrap();
        // Robot 1 would like to drive west along the same row.
        let r1 = p.plan(&l, &mut t, req(1, c(4, 1), Heading::West, c(1, 2))).unwrap();
        assert!(t.conflicts().is_empty());
        assert!(r1.arrivals(&l).iter().all(|&(cell, _)| cell != c(3, 1)));
        assert!(r0.end > 0.0);
        // Nothing ever swaps: for each pair of consecutive cells in one path,
        // the reverse step is not taken by the other robot at an overlapping time.
        let steps = |path: &TimedPath| {
            let mut prev = path.moves.first().map(|m| match m {
                Move::Run { cells, .. } => cells[0],
                Move::Wait { cell, .. } | Move::Turn { cell, .. } => *cell,
            });
            let mut out = Vec::new();
            for (cell, at) in path.arrivals(&l) {
                out.push((prev.unwrap(), cell, at));
                prev = Some(cell);
            }
            out
        };
        for (a, b, ta) in steps(&r0) {
            for (x, y, tb) in steps(&r1) {
                assert!(!(a == y && b == x && (ta - tb).abs() < 3.0));
            }
        }
    }

    #[test]
    fn crossing_robots_do_not_collide() {
        let l = layout();
        let mut t = ReservationTable::new(l.len(), 8);
        let mut p = Planner::new(PlannerConfig::default());
        let s = l.storage_locations();
        let mut paths = Vec::new();
        for r in 0..8u32 {
            let a = s[(r as usize * 13) % s.len()];
            t.reserve(a, RobotId(r), 0, OPEN);
        }
        for r in 0..8u32 {
            let a = s[(r as usize * 13) % s.len()];
            let b = s[(r as usize * 13 + 61) % s.len()];
            paths.push(p.plan(&l, &mut t, req(r, a, Heading::North, b)).unwrap());
            assert!(t.conflicts().is_empty());
        }
    }
}
