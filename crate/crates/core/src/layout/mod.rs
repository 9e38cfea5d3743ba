//! Parametric warehouse topology.
//!
//! The storage area is a grid of pod blocks separated by one-way aisles and
//! wrapped in a one-way ring road. Replenishment stations hang off the left
//! side of the ring and pick stations off the right side. Each station is a
//! two-row dead end: an entry row holding the buffer queue and the access
//! point, and an exit row leading back to the ring.

mod paths;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::{Heading, KinematicParams};
use crate::CellId;

pub use paths::{estimate_path_time, PathTimes, Search};

/// Grid pitch in metres.
pub const CELL_PITCH: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Storage,
    Aisle,
    Buffer,
    Access,
    Exit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StationKind {
    Pick,
    Replenishment,
}

impl fmt::Display for StationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StationKind::Pick => "pick",
            StationKind::Replenishment => "replenishment",
        })
    }
}

/// Station identity inside a layout: kind plus index in activation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StationRef {
    pub kind: StationKind,
    pub index: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Waypoint {
    pub id: CellId,
    pub x: i32,
    pub y: i32,
    pub kind: CellKind,
    pub dwell: bool,
    pub station: Option<StationRef>,
    /// Directed edge per heading, if any.
    pub out: [Option<CellId>; 4],
}

impl Waypoint {
    pub fn position(&self) -> (f64, f64) {
        (self.x as f64 * CELL_PITCH, self.y as f64 * CELL_PITCH)
    }

    pub fn outgoing(&self) -> impl Iterator<Item = CellId> + '_ {
        self.out.iter().flatten().copied()
    }

    pub fn is_storage(&self) -> bool {
        self.kind == CellKind::Storage
    }

    /// Cells of a station's entry row only admit robots bound for that station.
    pub fn gated(&self) -> Option<StationRef> {
        match self.kind {
            CellKind::Buffer | CellKind::Access => self.station,
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StationGeometry {
    pub id: StationRef,
    pub access: CellId,
    /// `buffers[k - 1]` is queue position `k`; position 1 is the head next to
    /// the access point.
    pub buffers: Vec<CellId>,
    /// From the cell beside the access point back towards the ring.
    pub exit: Vec<CellId>,
}

impl StationGeometry {
    /// Queue positions: 0 is the access point.
    pub fn slot_cell(&self, pos: usize) -> CellId {
        if pos == 0 { self.access } else { self.buffers[pos - 1] }
    }

    pub fn lane_len(&self) -> usize {
        self.buffers.len() + 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutConfig {
    /// Pod rows per storage block.
    pub block_rows: u32,
    /// Pod columns per storage block.
    pub block_cols: u32,
    pub aisles: u32,
    pub cross_aisles: u32,
    pub storage_locations: u32,
    pub pods: u32,
    pub pick_stations: u32,
    pub replenishment_stations: u32,
    pub buffer_depth: u32,
    /// Share of storage locations, nearest the centre, usable as dwell points.
    pub dwell_share: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            block_rows: 2,
            block_cols: 4,
            aisles: 12,
            cross_aisles: 12,
            storage_locations: 1352,
            pods: 1149,
            pick_stations: 2,
            replenishment_stations: 2,
            buffer_depth: 4,
            dwell_share: 0.2,
        }
    }
}

impl LayoutConfig {
    pub fn storage_capacity(&self) -> u64 {
        (self.cross_aisles as u64 + 1)
            * (self.aisles as u64 + 1)
            * self.block_rows as u64
            * self.block_cols as u64
    }

    /// Storage-area width in cells, ring included.
    pub fn area_width(&self) -> u32 {
        (self.aisles + 1) * (self.block_cols + 1) + 1
    }

    pub fn area_height(&self) -> u32 {
        (self.cross_aisles + 1) * (self.block_rows + 1) + 1
    }

    /// Station slots available on one side of the ring.
    pub fn station_slots(&self) -> u32 {
        ((self.area_height().saturating_sub(1)) / 3).min(6)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum LayoutError {
    #[error("layout dimension `{0}` must be positive")]
    Zero(&'static str),
    #[error("{requested} storage locations requested but the block grid holds {capacity}")]
    StorageOverflow { requested: u64, capacity: u64 },
    #[error("{pods} pods do not fit into {locations} storage locations")]
    TooManyPods { pods: u32, locations: u32 },
    #[error("{requested} {kind} stations requested but only {available} fit")]
    StationsDoNotFit { kind: StationKind, requested: u32, available: u32 },
    #[error("dwell share must lie in (0, 1], got {0}")]
    DwellShare(f64),
}

#[derive(Clone, Debug)]
pub struct Layout {
    pub config: LayoutConfig,
    pub width: u32,
    pub height: u32,
    cells: Vec<Waypoint>,
    grid: Vec<Option<CellId>>,
    storage: Vec<CellId>,
    dwell: Vec<CellId>,
    pick: Vec<StationGeometry>,
    repl: Vec<StationGeometry>,
    pub kinematics: KinematicParams,
}

/// Alias matching the common name of the built topology.
pub type WaypointGraph = Layout;

struct Builder {
    width: i32,
    height: i32,
    cells: Vec<Waypoint>,
    grid: Vec<Option<CellId>>,
}

impl Builder {
    fn add(&mut self, x: i32, y: i32, kind: CellKind, station: Option<StationRef>) -> CellId {
        let id = CellId(self.cells.len() as u32);
        self.cells.push(Waypoint { id, x, y, kind, dwell: false, station, out: [None; 4] });
        self.grid[(y * self.width + x) as usize] = Some(id);
        id
    }

    fn at(&self, x: i32, y: i32) -> Option<CellId> {
        if x < 0 || y < 0 || x >= self.width || y >= self.height {
            return None;
        }
        self.grid[(y * self.width + x) as usize]
    }

    fn link(&mut self, from: CellId, h: Heading) {
        let w = &self.cells[from.index()];
        let (dx, dy) = h.delta();
        if let Some(to) = self.at(w.x + dx, w.y + dy) {
            self.cells[from.index()].out[h as usize] = Some(to);
        }
    }
}

/// Builds the waypoint graph for `config`, with kinematics used by path estimates.
pub fn build_layout(config: &LayoutConfig, kinematics: KinematicParams) -> Result<Layout, LayoutError> {
    for (v, name) in [
        (config.block_rows, "block_rows"),
        (config.block_cols, "block_cols"),
        (config.storage_locations, "storage_locations"),
        (config.pick_stations, "pick_stations"),
        (config.replenishment_stations, "replenishment_stations"),
    ] {
        if v == 0 {
            return Err(LayoutError::Zero(name));
        }
    }
    if !(config.dwell_share > 0.0 && config.dwell_share <= 1.0) {
        return Err(LayoutError::DwellShare(config.dwell_share));
    }
    let capacity = config.storage_capacity();
    if config.storage_locations as u64 > capacity {
        return Err(LayoutError::StorageOverflow { requested: config.storage_locations as u64, capacity });
    }
    if config.pods > config.storage_locations {
        return Err(LayoutError::TooManyPods { pods: config.pods, locations: config.storage_locations });
    }
    let slots = config.station_slots();
    for (kind, requested) in [
        (StationKind::Pick, config.pick_stations),
        (StationKind::Replenishment, config.replenishment_stations),
    ] {
        if requested > slots {
            return Err(LayoutError::StationsDoNotFit { kind, requested, available: slots });
        }
    }

    let aw = config.area_width() as i32;
    let ah = config.area_height() as i32;
    let depth = config.buffer_depth as i32;
    let ox = depth + 1;
    let width = aw + 2 * ox;
    let mut b = Builder { width, height: ah, cells: Vec::new(), grid: vec![None; (width * ah) as usize] };

    let bw = config.block_cols as i32;
    let bh = config.block_rows as i32;
    let is_vlane = |x: i32| x == 0 || x == aw - 1 || x % (bw + 1) == 0;
    let is_hlane = |y: i32| y == 0 || y == ah - 1 || y % (bh + 1) == 0;

    // Lanes first, then storage cells in row-major order until the requested
    // count is reached.
    for y in 0..ah {
        for x in 0..aw {
            if is_vlane(x) || is_hlane(y) {
                b.add(ox + x, y, CellKind::Aisle, None);
            }
        }
    }
    let mut storage = Vec::new();
    'fill: for y in 0..ah {
        for x in 0..aw {
            if !is_vlane(x) && !is_hlane(y) {
                if storage.len() as u32 == config.storage_locations {
                    break 'fill;
                }
                storage.push(b.add(ox + x, y, CellKind::Storage, None));
            }
        }
    }

    // Ring: counter-clockwise loop.
    for x in 0..aw - 1 {
        let c = b.at(ox + x, 0).unwrap();
        b.link(c, Heading::East);
    }
    for y in 0..ah - 1 {
        let c = b.at(ox + aw - 1, y).unwrap();
        b.link(c, Heading::North);
    }
    for x in 1..aw {
        let c = b.at(ox + x, ah - 1).unwrap();
        b.link(c, Heading::West);
    }
    for y in 1..ah {
        let c = b.at(ox, y).unwrap();
        b.link(c, Heading::South);
    }
    // Interior aisles alternate direction by index.
    for j in 1..=config.aisles as i32 {
        let x = j * (bw + 1);
        let h = if j % 2 == 1 { Heading::North } else { Heading::South };
        for y in 0..ah {
            let c = b.at(ox + x, y).unwrap();
            let ahead = y + h.delta().1;
            if (0..ah).contains(&ahead) {
                b.link(c, h);
            }
        }
    }
    for i in 1..=config.cross_aisles as i32 {
        let y = i * (bh + 1);
        let h = if i % 2 == 1 { Heading::East } else { Heading::West };
        for x in 0..aw {
            let c = b.at(ox + x, y).unwrap();
            let ahead = x + h.delta().0;
            if (0..aw).contains(&ahead) {
                b.link(c, h);
            }
        }
    }
    // Storage cells connect both ways to every neighbour that exists.
    for &s in &storage {
        for h in Heading::ALL {
            b.link(s, h);
            let (dx, dy) = h.delta();
            let w = &b.cells[s.index()];
            if let Some(n) = b.at(w.x + dx, w.y + dy) {
                if b.cells[n.index()].kind == CellKind::Aisle {
                    b.link(n, h.opposite());
                }
            }
        }
    }

    // Stations. Candidate slots are spread evenly along the side and
    // activated from the centre outwards.
    let n_slots = slots as i32;
    let span = ah - 4;
    let mut slot_rows: Vec<i32> = (0..n_slots)
        .map(|k| if n_slots == 1 { 1 + span / 2 } else { 1 + k * span / (n_slots - 1) })
        .collect();
    let centre2 = ah - 1;
    slot_rows.sort_by_key(|&y| ((2 * y + 1 - centre2).abs(), y));

    let mut pick = Vec::new();
    for (k, &y) in slot_rows.iter().take(config.pick_stations as usize).enumerate() {
        let id = StationRef { kind: StationKind::Pick, index: k as u32 };
        // Right ring runs north: entry on row y, exit row above.
        pick.push(build_station(&mut b, id, ox + aw - 1, y, y + 1, 1, depth));
    }
    let mut repl = Vec::new();
    for (k, &y) in slot_rows.iter().take(config.replenishment_stations as usize).enumerate() {
        let id = StationRef { kind: StationKind::Replenishment, index: k as u32 };
        // Left ring runs south: entry on the upper row, exit row below.
        repl.push(build_station(&mut b, id, ox, y + 1, y, -1, depth));
    }

    // Dwell points: storage locations nearest the centre of the storage area.
    let cx2 = 2 * ox + aw - 1;
    let cy2 = ah - 1;
    let mut by_centre = storage.clone();
    by_centre.sort_by_key(|c| {
        let w = &b.cells[c.index()];
        let dx = (2 * w.x - cx2) as i64;
        let dy = (2 * w.y - cy2) as i64;
        (dx * dx + dy * dy, c.0)
    });
    let n_dwell = ((storage.len() as f64 * config.dwell_share + 0.5) as usize).clamp(1, storage.len());
    let mut dwell: Vec<CellId> = by_centre[..n_dwell].to_vec();
    dwell.sort();
    for &d in &dwell {
        b.cells[d.index()].dwell = true;
    }

    Ok(Layout {
        config: config.clone(),
        width: width as u32,
        height: ah as u32,
        cells: b.cells,
        grid: b.grid,
        storage,
        dwell,
        pick,
        repl,
        kinematics,
    })
}

/// `outward` is +1 for stations east of the ring and -1 for west.
fn build_station(b: &mut Builder, id: StationRef, ring_x: i32, entry_y: i32, exit_y: i32, outward: i32, depth: i32) -> StationGeometry {
    let out_h = if outward > 0 { Heading::East } else { Heading::West };
    let back_h = out_h.opposite();
    let exit_turn = if exit_y > entry_y { Heading::North } else { Heading::South };
    let ring_in = b.at(ring_x, entry_y).unwrap();
    let ring_out = b.at(ring_x, exit_y).unwrap();

    let mut entry = Vec::new();
    for k in 1..=depth {
        entry.push(b.add(ring_x + outward * k, entry_y, CellKind::Buffer, Some(id)));
    }
    let access = b.add(ring_x + outward * (depth + 1), entry_y, CellKind::Access, Some(id));
    let mut exit = Vec::new();
    for k in (1..=depth + 1).rev() {
        exit.push(b.add(ring_x + outward * k, exit_y, CellKind::Exit, Some(id)));
    }

    b.link(ring_in, out_h);
    for &c in &entry {
        b.link(c, out_h);
    }
    b.link(access, exit_turn);
    for &c in &exit {
        b.link(c, back_h);
    }
    let _ = ring_out;

    let mut buffers = entry;
    buffers.reverse();
    StationGeometry { id, access, buffers, exit }
}

impl Layout {
    pub fn cells(&self) -> &[Waypoint] {
        &self.cells
    }

    pub fn cell(&self, id: CellId) -> &Waypoint {
        &self.cells[id.index()]
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn at(&self, x: i32, y: i32) -> Option<CellId> {
        if x < 0 || y < 0 || x >= self.width as i32 || y >= self.height as i32 {
            return None;
        }
        self.grid[(y * self.width as i32 + x) as usize]
    }

    pub fn next(&self, from: CellId, h: Heading) -> Option<CellId> {
        self.cells[from.index()].out[h as usize]
    }

    pub fn storage_locations(&self) -> &[CellId] {
        &self.storage
    }

    pub fn dwell_points(&self) -> &[CellId] {
        &self.dwell
    }

    pub fn stations(&self, kind: StationKind) -> &[StationGeometry] {
        match kind {
            StationKind::Pick => &self.pick,
            StationKind::Replenishment => &self.repl,
        }
    }

    pub fn station(&self, id: StationRef) -> &StationGeometry {
        &self.stations(id.kind)[id.index as usize]
    }

    /// Manhattan distance in metres.
    pub fn manhattan(&self, a: CellId, b: CellId) -> f64 {
        let (wa, wb) = (self.cell(a), self.cell(b));
        ((wa.x - wb.x).abs() + (wa.y - wb.y).abs()) as f64 * CELL_PITCH
    }

    /// Heading of the unit step from `a` to the adjacent `b`.
    pub fn step_heading(&self, a: CellId, b: CellId) -> Option<Heading> {
        Heading::ALL.into_iter().find(|&h| self.next(a, h) == Some(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::VecDeque;

    fn reference() -> Layout {
        build_layout(&LayoutConfig::default(), KinematicParams::default()).unwrap()
    }

    fn tiny() -> LayoutConfig {
        LayoutConfig {
            aisles: 0,
            cross_aisles: 0,
            storage_locations: 8,
            pods: 6,
            pick_stations: 1,
            replenishment_stations: 1,
            ..LayoutConfig::default()
        }
    }

    fn reachable(l: &Layout, from: CellId) -> Vec<bool> {
        let mut seen = vec![false; l.len()];
        let mut q = VecDeque::from([from]);
        seen[from.index()] = true;
        while let Some(c) = q.pop_front() {
            for n in l.cell(c).outgoing() {
                if !seen[n.index()] {
                    seen[n.index()] = true;
                    q.push_back(n);
                }
            }
        }
        seen
    }

    #[test]
    fn reference_dimensions() {
        let l = reference();
        assert_eq!(l.storage_locations().len(), 1352);
        assert_eq!(l.config.area_width(), 66);
        assert_eq!(l.config.area_height(), 40);
        assert_eq!(l.stations(StationKind::Pick).len(), 2);
        assert_eq!(l.config.station_slots(), 6);
    }

    #[test]
    fn every_storage_location_touches_a_lane() {
        let l = reference();
        for &s in l.storage_locations() {
            assert!(l.cell(s).outgoing().any(|n| l.cell(n).kind == CellKind::Aisle), "{s}");
        }
    }

    #[test]
    fn stations_reach_all_storage_and_back() {
        for cfg in [LayoutConfig::default(), tiny()] {
            let l = build_layout(&cfg, KinematicParams::default()).unwrap();
            for kind in [StationKind::Pick, StationKind::Replenishment] {
                for st in l.stations(kind) {
                    let seen = reachable(&l, st.access);
                    assert!(l.storage_locations().iter().all(|s| seen[s.index()]));
                }
            }
            for &s in l.storage_locations() {
                let seen = reachable(&l, s);
                for kind in [StationKind::Pick, StationKind::Replenishment] {
                    assert!(l.stations(kind).iter().all(|st| seen[st.access.index()]));
                }
            }
        }
    }

    #[test]
    fn lanes_are_one_way() {
        let l = reference();
        for w in l.cells() {
            if w.kind != CellKind::Aisle {
                continue;
            }
            for n in w.outgoing() {
                if l.cell(n).kind == CellKind::Aisle {
                    assert!(!l.cell(n).outgoing().any(|m| m == w.id), "{} <-> {}", w.id, n);
                }
            }
        }
    }

    #[test]
    fn minimal_layout_builds() {
        let l = build_layout(&tiny(), KinematicParams::default()).unwrap();
        assert_eq!(l.storage_locations().len(), 8);
        assert_eq!(l.stations(StationKind::Pick)[0].lane_len(), 5);
    }

    #[test]
    fn rejects_oversized_configs() {
        let mut c = tiny();
        c.storage_locations = 9;
        assert!(matches!(build_layout(&c, KinematicParams::default()), Err(LayoutError::StorageOverflow { .. })));
        let mut c = tiny();
        c.pods = 9;
        assert!(matches!(build_layout(&c, KinematicParams::default()), Err(LayoutError::TooManyPods { .. })));
        let mut c = tiny();
        c.pick_stations = 2;
        assert!(matches!(build_layout(&c, KinematicParams::default()), Err(LayoutError::StationsDoNotFit { .. })));
    }

    #[test]
    fn station_geometry() {
        let l = reference();
        let st = &l.stations(StationKind::Pick)[0];
        assert_eq!(l.cell(st.access).kind, CellKind::Access);
        // Entry row flows from the ring towards the access point.
        assert_eq!(l.next(st.buffers[0], Heading::East), Some(st.access));
        let exit = l.cell(st.access).outgoing().next().unwrap();
        assert_eq!(exit, st.exit[0]);
        // The first pick station is the one closest to the vertical centre.
        let centre = l.height as i32 / 2;
        let y0 = l.cell(st.access).y;
        for other in &l.stations(StationKind::Pick)[1..] {
            assert!((l.cell(other.access).y - centre).abs() >= (y0 - centre).abs() - 1);
        }
    }

    #[test]
    fn dwell_points_are_central_storage() {
        let l = reference();
        let n = l.dwell_points().len();
        assert_eq!(n, (1352.0f64 * 0.2 + 0.5) as usize);
        assert!(l.dwell_points().iter().all(|&d| l.cell(d).is_storage() && l.cell(d).dwell));
    }
}
