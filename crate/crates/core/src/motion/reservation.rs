//! Space-time reservations in fixed slices.

use alloc::vec;
use alloc::vec::Vec;

use crate::{CellId, RobotId};

/// Slice length in seconds.
pub const SLICE: f64 = 0.5;
/// End marker of a hold without a known end.
pub const OPEN: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hold {
    pub robot: RobotId,
    /// First slice held.
    pub start: u32,
    /// One past the last slice held, or [`OPEN`].
    pub end: u32,
}

/// Slice range enclosing the continuous interval `[a, b]`.
pub fn slice_range(a: f64, b: f64) -> (u32, u32) {
    let s = libm::floor(a / SLICE + 1e-9).max(0.0) as u32;
    let e = libm::ceil(b / SLICE - 1e-9).max(0.0) as u32;
    (s, e.max(s + 1))
}

pub fn slice_of(t: f64) -> u32 {
    libm::floor(t / SLICE + 1e-9).max(0.0) as u32
}

#[derive(Clone, Debug, Default)]
pub struct ReservationTable {
    cells: Vec<Vec<Hold>>,
    touched: Vec<Vec<CellId>>,
}

impl ReservationTable {
    pub fn new(cells: usize, robots: usize) -> Self {
        Self { cells: vec![Vec::new(); cells], touched: vec![Vec::new(); robots] }
    }

    /// True when no robot other than `robot` holds `cell` in `[start, end)`.
    pub fn is_free(&self, cell: CellId, start: u32, end: u32, robot: RobotId) -> bool {
        self.cells[cell.index()]
            .iter()
            .all(|h| h.robot == robot || h.end <= start || h.start >= end)
    }

    /// Another robot's hold on `cell` that never ends, if any.
    pub fn open_holder(&self, cell: CellId, robot: RobotId) -> Option<Hold> {
        self.cells[cell.index()].iter().find(|h| h.robot != robot && h.end == OPEN).copied()
    }

    pub fn holds(&self, cell: CellId) -> &[Hold] {
        &self.cells[cell.index()]
    }

    pub fn reserve(&mut self, cell: CellId, robot: RobotId, start: u32, end: u32) {
        debug_assert!(self.is_free(cell, start, end, robot), "double booking on {cell}");
        self.cells[cell.index()].push(Hold { robot, start, end });
        let t = &mut self.touched[robot.index()];
        if !t.contains(&cell) {
            t.push(cell);
        }
    }

    /// Drops every hold of `robot`.
    pub fn release(&mut self, robot: RobotId) {
        for c in core::mem::take(&mut self.touched[robot.index()]) {
            self.cells[c.index()].retain(|h| h.robot != robot);
        }
    }

    /// Forgets holds that ended before slice `before`.
    pub fn purge(&mut self, before: u32) {
        for (r, cells) in self.touched.iter_mut().enumerate() {
            cells.retain(|c| {
                let holds = &mut self.cells[c.index()];
                holds.retain(|h| h.robot.index() != r || h.end > before);
                holds.iter().any(|h| h.robot.index() == r)
            });
        }
    }

    /// Cells on which two different robots hold overlapping slices.
    pub fn conflicts(&self) -> Vec<CellId> {
        let mut out = Vec::new();
        for (i, holds) in self.cells.iter().enumerate() {
            let clash = holds.iter().enumerate().any(|(a, x)| {
                holds[a + 1..]
                    .iter()
                    .any(|y| x.robot != y.robot && x.start < y.end && y.start < x.end)
            });
            if clash {
                out.push(CellId(i as u32));
            }
        }
        out
    }
}
