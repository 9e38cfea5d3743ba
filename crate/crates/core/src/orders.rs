//! Pick and replenishment order generation under constant backlogs.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inventory::Sku;
use crate::rng::{exponential, std_normal, unit};
use crate::{OrderId, SkuId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OrderSize {
    Small,
    Mixed,
    Large,
}

impl OrderSize {
    pub const ALL: [OrderSize; 3] = [OrderSize::Small, OrderSize::Mixed, OrderSize::Large];
}

/// Discretised truncated normal: `N(mu, sigma)` rounded, kept in `[min, max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedNormal {
    pub mu: f64,
    pub sigma: f64,
    pub min: u32,
    pub max: u32,
}

impl TruncatedNormal {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        if self.min >= self.max || self.sigma <= 0.0 {
            return libm::round(self.mu).clamp(self.min as f64, self.max as f64) as u32;
        }
        loop {
            let x = libm::round(self.mu + self.sigma * std_normal(rng));
            if x >= self.min as f64 && x <= self.max as f64 {
                return x as u32;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrderParams {
    pub pick_backlog: usize,
    pub repl_backlog: usize,
    pub priority_share: f64,
    /// Seconds from submission to due time.
    pub priority_due: f64,
    pub normal_due: f64,
    pub repl_units_min: u32,
    pub repl_units_max: u32,
    pub lines: TruncatedNormal,
    pub units: TruncatedNormal,
    pub repl_pause_above: f64,
    pub repl_resume_below: f64,
    pub pick_pause_below: f64,
    pub pick_resume_above: f64,
}

impl Default for OrderParams {
    fn default() -> Self {
        Self {
            pick_backlog: 200,
            repl_backlog: 200,
            priority_share: 0.2,
            priority_due: 1800.0,
            normal_due: 7200.0,
            repl_units_min: 4,
            repl_units_max: 12,
            lines: TruncatedNormal { mu: 1.0, sigma: 1.0, min: 1, max: 4 },
            units: TruncatedNormal { mu: 1.0, sigma: 0.3, min: 1, max: 3 },
            repl_pause_above: 0.85,
            repl_resume_below: 0.65,
            pick_pause_below: 0.10,
            pick_resume_above: 0.60,
        }
    }
}

impl OrderParams {
    /// Line and unit distributions for an order-size setting.
    pub fn distributions(&self, size: OrderSize) -> (TruncatedNormal, TruncatedNormal) {
        match size {
            OrderSize::Small => (
                TruncatedNormal { mu: 1.0, sigma: 0.0, min: 1, max: 1 },
                TruncatedNormal { mu: 1.0, sigma: 0.0, min: 1, max: 1 },
            ),
            OrderSize::Mixed => (self.lines, self.units),
            OrderSize::Large => (
                TruncatedNormal { min: 2, ..self.lines },
                TruncatedNormal { min: 2, ..self.units },
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum OrderError {
    #[error("the SKU catalog is empty")]
    EmptyCatalog,
    #[error("large orders need at least two SKUs, catalog has {0}")]
    CatalogTooSmall(usize),
}

/// SKUs with their popularity, sampled proportionally to weight.
#[derive(Clone, Debug)]
pub struct SkuCatalog {
    pub skus: Vec<Sku>,
    cumulative: Vec<f64>,
}

impl SkuCatalog {
    pub fn new(skus: Vec<Sku>) -> Self {
        let mut acc = 0.0;
        let cumulative = skus
            .iter()
            .map(|s| {
                acc += s.popularity_weight;
                acc
            })
            .collect();
        Self { skus, cumulative }
    }

    /// `n` SKUs with weights from Exp(`lambda`) and unit sizes uniform in
    /// `[size_min, size_max]`.
    pub fn random<R: Rng + ?Sized>(n: usize, lambda: f64, size_min: u32, size_max: u32, rng: &mut R) -> Self {
        let skus = (0..n)
            .map(|i| {
                let popularity_weight = exponential(rng, lambda);
                let unit_size = rng.gen_range(size_min..=size_max);
                Sku { id: SkuId(i as u32), unit_size, popularity_weight }
            })
            .collect();
        Self::new(skus)
    }

    pub fn len(&self) -> usize {
        self.skus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skus.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.skus.iter().map(|s| s.popularity_weight).collect()
    }

    pub fn draw_sku<R: Rng + ?Sized>(&self, rng: &mut R) -> SkuId {
        let total = *self.cumulative.last().expect("empty catalog");
        let x = unit(rng) * total;
        let i = self.cumulative.partition_point(|&c| c <= x);
        SkuId(i.min(self.skus.len() - 1) as u32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderState {
    Backlog,
    Assigned,
    Complete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderLine {
    pub sku: SkuId,
    pub required: u32,
    /// Units committed from pods.
    pub picked: u32,
    /// Units reserved on pods, including those already picked.
    pub allocated: u32,
    /// Units the picker has finished handling.
    pub handled: u32,
}

impl OrderLine {
    /// Units still to be picked.
    pub fn remaining(&self) -> u32 {
        self.required - self.picked
    }

    /// Units not yet covered by a pod reservation.
    pub fn unallocated(&self) -> u32 {
        self.required - self.allocated
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PickOrder {
    pub id: OrderId,
    pub lines: Vec<OrderLine>,
    pub submit_time: f64,
    pub due_time: f64,
    pub station_assign_time: Option<f64>,
    pub priority: bool,
    pub state: OrderState,
}

impl PickOrder {
    pub fn line(&self, sku: SkuId) -> Option<&OrderLine> {
        self.lines.iter().find(|l| l.sku == sku)
    }

    pub fn line_mut(&mut self, sku: SkuId) -> Option<&mut OrderLine> {
        self.lines.iter_mut().find(|l| l.sku == sku)
    }

    pub fn required(&self, sku: SkuId) -> u32 {
        self.line(sku).map_or(0, |l| l.required)
    }

    pub fn total_units(&self) -> u32 {
        self.lines.iter().map(|l| l.required).sum()
    }

    pub fn is_fully_handled(&self) -> bool {
        self.lines.iter().all(|l| l.handled == l.required)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReplState {
    Backlog,
    Assigned,
    Stored,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplenishmentOrder {
    pub id: OrderId,
    pub sku: SkuId,
    pub units: u32,
    pub arrival_sequence_index: u64,
    pub state: ReplState,
}

/// Order factory for one run.
#[derive(Clone, Debug)]
pub struct OrderGenerator {
    pub catalog: SkuCatalog,
    pub params: OrderParams,
    next_id: u64,
    next_seq: u64,
}

impl OrderGenerator {
    pub fn new(catalog: SkuCatalog, params: OrderParams) -> Self {
        Self { catalog, params, next_id: 0, next_seq: 0 }
    }

    pub fn generate_pick_order<R: Rng + ?Sized>(&mut self, size: OrderSize, rng: &mut R, now: f64) -> Result<PickOrder, OrderError> {
        let n_skus = self.catalog.len();
        if n_skus == 0 {
            return Err(OrderError::EmptyCatalog);
        }
        if size == OrderSize::Large && n_skus < 2 {
            return Err(OrderError::CatalogTooSmall(n_skus));
        }
        let (line_dist, unit_dist) = self.params.distributions(size);
        let n_lines = (line_dist.sample(rng) as usize).min(n_skus);
        let mut lines: Vec<OrderLine> = Vec::with_capacity(n_lines);
        while lines.len() < n_lines {
            let sku = self.catalog.draw_sku(rng);
            if lines.iter().any(|l| l.sku == sku) {
                continue;
            }
            let required = unit_dist.sample(rng);
            lines.push(OrderLine { sku, required, picked: 0, allocated: 0, handled: 0 });
        }
        let priority = unit(rng) < self.params.priority_share;
        let due = if priority { self.params.priority_due } else { self.params.normal_due };
        let id = OrderId(self.next_id);
        self.next_id += 1;
        Ok(PickOrder {
            id,
            lines,
            submit_time: now,
            due_time: now + due,
            station_assign_time: None,
            priority,
            state: OrderState::Backlog,
        })
    }

    pub fn generate_replenishment_order<R: Rng + ?Sized>(&mut self, return_share: f64, rng: &mut R) -> ReplenishmentOrder {
        let units = if unit(rng) < return_share {
            1
        } else {
            rng.gen_range(self.params.repl_units_min..=self.params.repl_units_max)
        };
        let sku = self.catalog.draw_sku(rng);
        let id = OrderId(self.next_id);
        self.next_id += 1;
        let seq = self.next_seq;
        self.next_seq += 1;
        ReplenishmentOrder { id, sku, units, arrival_sequence_index: seq, state: ReplState::Backlog }
    }
}

/// Hysteresis switches pausing order generation by storage utilization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationPauses {
    pub pick_paused: bool,
    pub repl_paused: bool,
}

impl GenerationPauses {
    /// Applies the thresholds; returns true if either switch flipped.
    pub fn update_generation_pauses(&mut self, utilization: f64, p: &OrderParams) -> bool {
        let before = *self;
        if self.repl_paused {
            if utilization < p.repl_resume_below {
                self.repl_paused = false;
            }
        } else if utilization > p.repl_pause_above {
            self.repl_paused = true;
        }
        if self.pick_paused {
            if utilization > p.pick_resume_above {
                self.pick_paused = false;
            }
        } else if utilization < p.pick_pause_below {
            self.pick_paused = true;
        }
        before != *self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn catalog(weights: &[f64]) -> SkuCatalog {
        SkuCatalog::new(
            weights
                .iter()
                .enumerate()
                .map(|(i, &w)| Sku { id: SkuId(i as u32), unit_size: 4, popularity_weight: w })
                .collect(),
        )
    }

    #[test]
    fn single_sku_always_drawn() {
        let c = catalog(&[0.3]);
        let mut rng = stream(1, 0);
        assert!((0..1000).all(|_| c.draw_sku(&mut rng) == SkuId(0)));
    }

    #[test]
    fn draw_frequency_follows_weights() {
        let c = catalog(&[3.0, 1.0]);
        let mut rng = stream(2, 0);
        let n = 100_000;
        let first = (0..n).filter(|_| c.draw_sku(&mut rng) == SkuId(0)).count();
        assert!((first as f64 / n as f64 - 0.75).abs() < 0.02);
    }

    #[test]
    fn small_orders_are_single_unit() {
        let mut g = OrderGenerator::new(catalog(&[1.0; 10]), OrderParams::default());
        let mut rng = stream(3, 0);
        for _ in 0..1000 {
            let o = g.generate_pick_order(OrderSize::Small, &mut rng, 5.0).unwrap();
            assert_eq!(o.lines.len(), 1);
            assert_eq!(o.lines[0].required, 1);
        }
    }

    #[test]
    fn mixed_and_large_ranges() {
        let mut g = OrderGenerator::new(catalog(&[1.0; 50]), OrderParams::default());
        let mut rng = stream(4, 0);
        for _ in 0..100_000 {
            let o = g.generate_pick_order(OrderSize::Mixed, &mut rng, 0.0).unwrap();
            assert!((1..=4).contains(&o.lines.len()));
            assert!(o.lines.iter().all(|l| (1..=3).contains(&l.required)));
        }
        for _ in 0..100_000 {
            let o = g.generate_pick_order(OrderSize::Large, &mut rng, 0.0).unwrap();
            assert!(o.lines.len() >= 2);
            assert!(o.lines.iter().all(|l| l.required >= 2));
        }
    }

    #[test]
    fn lines_use_distinct_skus() {
        let mut g = OrderGenerator::new(catalog(&[10.0, 1.0, 1.0, 0.1]), OrderParams::default());
        let mut rng = stream(5, 0);
        for _ in 0..10_000 {
            let o = g.generate_pick_order(OrderSize::Large, &mut rng, 0.0).unwrap();
            for (i, a) in o.lines.iter().enumerate() {
                assert!(o.lines[i + 1..].iter().all(|b| b.sku != a.sku));
            }
        }
    }

    #[test]
    fn large_needs_two_skus() {
        let mut g = OrderGenerator::new(catalog(&[1.0]), OrderParams::default());
        let mut rng = stream(6, 0);
        assert_eq!(g.generate_pick_order(OrderSize::Large, &mut rng, 0.0), Err(OrderError::CatalogTooSmall(1)));
        assert!(g.generate_pick_order(OrderSize::Mixed, &mut rng, 0.0).is_ok());
    }

    #[test]
    fn due_times_follow_priority() {
        let mut g = OrderGenerator::new(catalog(&[1.0; 5]), OrderParams::default());
        let mut rng = stream(7, 0);
        let mut prio = 0;
        for _ in 0..20_000 {
            let o = g.generate_pick_order(OrderSize::Mixed, &mut rng, 100.0).unwrap();
            let window = if o.priority { 1800.0 } else { 7200.0 };
            assert_eq!(o.due_time, 100.0 + window);
            prio += o.priority as u32;
        }
        assert!((prio as f64 / 20_000.0 - 0.2).abs() < 0.015);
    }

    #[test]
    fn replenishment_unit_counts() {
        let mut g = OrderGenerator::new(catalog(&[1.0; 5]), OrderParams::default());
        let mut rng = stream(8, 0);
        assert!((0..10_000).all(|_| (4..=12).contains(&g.generate_replenishment_order(0.0, &mut rng).units)));
        assert!((0..1_000).all(|_| g.generate_replenishment_order(1.0, &mut rng).units == 1));
        let n = 100_000;
        let singles = (0..n).filter(|_| g.generate_replenishment_order(0.3, &mut rng).units == 1).count();
        assert!((singles as f64 / n as f64 - 0.3).abs() < 0.01);
        let a = g.generate_replenishment_order(0.0, &mut rng).arrival_sequence_index;
        let b = g.generate_replenishment_order(0.0, &mut rng).arrival_sequence_index;
        assert!(b > a);
    }

    #[test]
    fn pause_hysteresis() {
        let p = OrderParams::default();
        let mut s = GenerationPauses::default();
        assert!(s.update_generation_pauses(0.90, &p));
        assert!(s.repl_paused);
        assert!(!s.update_generation_pauses(0.70, &p));
        assert!(s.repl_paused);
        s.update_generation_pauses(0.60, &p);
        assert!(!s.repl_paused);
        s.update_generation_pauses(0.05, &p);
        assert!(s.pick_paused);
        s.update_generation_pauses(0.5, &p);
        assert!(s.pick_paused);
        s.update_generation_pauses(0.61, &p);
        assert!(!s.pick_paused);
    }
}
