//! SKUs, pods and unit-level stock with pick and put reservations.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{CellId, PodId, SkuId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sku {
    pub id: SkuId,
    /// Slots taken by one unit.
    pub unit_size: u32,
    pub popularity_weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub sku: SkuId,
    pub units: u32,
    /// Units promised to picks that have not happened yet.
    pub reserved: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PodLocation {
    Stored(CellId),
    Transit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pod {
    pub id: PodId,
    pub capacity_slots: u32,
    /// Sorted by SKU.
    items: Vec<Item>,
    occupied: u32,
    /// Slots promised to pending replenishment puts.
    pub reserved_in: u32,
    pub location: PodLocation,
    pub class: u8,
}

impl Pod {
    pub fn new(id: PodId, capacity_slots: u32, location: PodLocation) -> Self {
        Self { id, capacity_slots, items: Vec::new(), occupied: 0, reserved_in: 0, location, class: 0 }
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn occupied_slots(&self) -> u32 {
        self.occupied
    }

    pub fn free_slots(&self) -> u32 {
        self.capacity_slots - self.occupied - self.reserved_in
    }

    fn find(&self, sku: SkuId) -> Result<usize, usize> {
        self.items.binary_search_by_key(&sku, |it| it.sku)
    }

    /// Units on the pod, reserved or not.
    pub fn units(&self, sku: SkuId) -> u32 {
        self.find(sku).map_or(0, |i| self.items[i].units)
    }

    /// Units not yet promised to a pick.
    pub fn available(&self, sku: SkuId) -> u32 {
        self.find(sku).map_or(0, |i| self.items[i].units - self.items[i].reserved)
    }

    pub fn reserved_out(&self, sku: SkuId) -> u32 {
        self.find(sku).map_or(0, |i| self.items[i].reserved)
    }

    /// `(sku, available)` pairs with at least one available unit.
    pub fn net_contents(&self) -> impl Iterator<Item = (SkuId, u32)> + '_ {
        self.items.iter().filter(|it| it.units > it.reserved).map(|it| (it.sku, it.units - it.reserved))
    }

    pub fn total_units(&self) -> u64 {
        self.items.iter().map(|it| it.units as u64).sum()
    }

    pub fn is_stored(&self) -> bool {
        matches!(self.location, PodLocation::Stored(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum InventoryError {
    #[error("pod {pod} offers {available} unreserved units of {sku}, {requested} requested")]
    InsufficientUnits { pod: PodId, sku: SkuId, available: u32, requested: u32 },
    #[error("pod {pod} has {free} free slots, {requested} requested")]
    InsufficientSpace { pod: PodId, free: u32, requested: u32 },
    #[error("zero-unit request")]
    Empty,
}

/// Promise of `units` of `sku` on `pod` to a pick.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[must_use]
pub struct PickReservation {
    pub pod: PodId,
    pub sku: SkuId,
    pub units: u32,
}

/// Space on `pod` held for a put of `units` of `sku`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[must_use]
pub struct PutReservation {
    pub pod: PodId,
    pub sku: SkuId,
    pub units: u32,
    pub slots: u32,
}

#[derive(Clone, Debug)]
pub struct StockLedger {
    pub skus: Vec<Sku>,
    pub pods: Vec<Pod>,
    /// Units per SKU summed over all pods.
    availability: Vec<u64>,
    initial: Vec<u64>,
    replenished: Vec<u64>,
    picked: Vec<u64>,
    occupied: u64,
    capacity: u64,
}

impl StockLedger {
    pub fn new(skus: Vec<Sku>, pods: Vec<Pod>) -> Self {
        let n = skus.len();
        let capacity = pods.iter().map(|p| p.capacity_slots as u64).sum();
        let mut ledger = Self {
            skus,
            pods,
            availability: vec![0; n],
            initial: vec![0; n],
            replenished: vec![0; n],
            picked: vec![0; n],
            occupied: 0,
            capacity,
        };
        ledger.recount();
        ledger.mark_initial();
        ledger
    }

    fn recount(&mut self) {
        self.availability.iter_mut().for_each(|a| *a = 0);
        self.occupied = 0;
        for p in &self.pods {
            self.occupied += p.occupied as u64;
            for it in &p.items {
                self.availability[it.sku.index()] += it.units as u64;
            }
        }
    }

    /// Freezes the current stock as the baseline for conservation checks.
    pub fn mark_initial(&mut self) {
        self.initial.clone_from(&self.availability);
        self.replenished.iter_mut().for_each(|x| *x = 0);
        self.picked.iter_mut().for_each(|x| *x = 0);
    }

    pub fn pod(&self, id: PodId) -> &Pod {
        &self.pods[id.index()]
    }

    pub fn pod_mut(&mut self, id: PodId) -> &mut Pod {
        &mut self.pods[id.index()]
    }

    pub fn sku(&self, id: SkuId) -> &Sku {
        &self.skus[id.index()]
    }

    pub fn availability(&self, sku: SkuId) -> u64 {
        self.availability[sku.index()]
    }

    /// Occupied slots over total pod slot capacity.
    pub fn utilization(&self) -> f64 {
        if self.capacity == 0 { 0.0 } else { self.occupied as f64 / self.capacity as f64 }
    }

    pub fn occupied_slots(&self) -> u64 {
        self.occupied
    }

    pub fn reserve_pick(&mut self, pod: PodId, sku: SkuId, units: u32) -> Result<PickReservation, InventoryError> {
        if units == 0 {
            return Err(InventoryError::Empty);
        }
        let p = &mut self.pods[pod.index()];
        let available = p.available(sku);
        if available < units {
            return Err(InventoryError::InsufficientUnits { pod, sku, available, requested: units });
        }
        let i = p.find(sku).unwrap();
        p.items[i].reserved += units;
        Ok(PickReservation { pod, sku, units })
    }

    /// Removes the reserved units from the pod.
    pub fn commit_pick(&mut self, r: PickReservation) {
        let size = self.skus[r.sku.index()].unit_size;
        let p = &mut self.pods[r.pod.index()];
        let i = p.find(r.sku).expect("reservation on missing sku");
        let it = &mut p.items[i];
        assert!(it.reserved >= r.units && it.units >= r.units, "pick commit exceeds reservation");
        it.reserved -= r.units;
        it.units -= r.units;
        if it.units == 0 {
            p.items.remove(i);
        }
        p.occupied -= r.units * size;
        self.occupied -= (r.units * size) as u64;
        self.availability[r.sku.index()] -= r.units as u64;
        self.picked[r.sku.index()] += r.units as u64;
    }

    pub fn cancel_pick(&mut self, r: PickReservation) {
        let p = &mut self.pods[r.pod.index()];
        let i = p.find(r.sku).expect("reservation on missing sku");
        p.items[i].reserved -= r.units;
    }

    pub fn reserve_replenishment_space(&mut self, pod: PodId, sku: SkuId, units: u32) -> Result<PutReservation, InventoryError> {
        if units == 0 {
            return Err(InventoryError::Empty);
        }
        let slots = units * self.skus[sku.index()].unit_size;
        let p = &mut self.pods[pod.index()];
        let free = p.free_slots();
        if free < slots {
            return Err(InventoryError::InsufficientSpace { pod, free, requested: slots });
        }
        p.reserved_in += slots;
        Ok(PutReservation { pod, sku, units, slots })
    }

    /// Turns reserved space into stock.
    pub fn commit_put(&mut self, r: PutReservation) {
        let p = &mut self.pods[r.pod.index()];
        p.reserved_in -= r.slots;
        p.occupied += r.slots;
        match p.find(r.sku) {
            Ok(i) => p.items[i].units += r.units,
            Err(i) => p.items.insert(i, Item { sku: r.sku, units: r.units, reserved: 0 }),
        }
        self.occupied += r.slots as u64;
        self.availability[r.sku.index()] += r.units as u64;
        self.replenished[r.sku.index()] += r.units as u64;
    }

    pub fn cancel_put(&mut self, r: PutReservation) {
        self.pods[r.pod.index()].reserved_in -= r.slots;
    }

    /// Places stock directly; used while building the initial inventory.
    pub fn place(&mut self, pod: PodId, sku: SkuId, units: u32) -> Result<(), InventoryError> {
        let r = self.reserve_replenishment_space(pod, sku, units)?;
        self.commit_put(r);
        self.replenished[sku.index()] -= units as u64;
        self.initial[sku.index()] += units as u64;
        Ok(())
    }

    /// Checks every ledger invariant, returning a description of the first
    /// violation.
    pub fn check(&self) -> Result<(), &'static str> {
        let mut avail = vec![0u64; self.skus.len()];
        let mut occupied = 0u64;
        for p in &self.pods {
            let mut slots = 0;
            for it in &p.items {
                if it.reserved > it.units {
                    return Err("pick reservation exceeds stock");
                }
                avail[it.sku.index()] += it.units as u64;
                slots += it.units * self.skus[it.sku.index()].unit_size;
            }
            if slots != p.occupied {
                return Err("pod slot count out of sync");
            }
            if p.occupied + p.reserved_in > p.capacity_slots {
                return Err("pod over capacity");
            }
            occupied += slots as u64;
        }
        if avail != self.availability || occupied != self.occupied {
            return Err("aggregate stock out of sync");
        }
        for i in 0..self.skus.len() {
            if self.initial[i] + self.replenished[i] != self.availability[i] + self.picked[i] {
                return Err("stock not conserved");
            }
        }
        Ok(())
    }
}

/// Class index per entry of `weights` from cumulative frequency share: the
/// most popular SKUs making up the first `bounds[0]` of demand are class 0,
/// and so on.
pub fn frequency_classes(weights: &[f64], bounds: &[f64]) -> Vec<u8> {
    let total: f64 = weights.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut classes = vec![0u8; weights.len()];
    let mut cum = 0.0;
    for i in order {
        let share = if total > 0.0 { cum / total } else { 0.0 };
        let k = bounds.iter().position(|&b| share < b - 1e-12).unwrap_or(bounds.len() - 1);
        classes[i] = k as u8;
        cum += weights[i];
    }
    classes
}

/// Class per index when the first `bounds[0]` share of `n` items is class 0,
/// and so on.
pub fn share_classes(n: usize, bounds: &[f64]) -> Vec<u8> {
    (0..n)
        .map(|i| {
            let share = i as f64 / n as f64;
            bounds.iter().position(|&b| share < b - 1e-12).unwrap_or(bounds.len() - 1) as u8
        })
        .collect()
}

/// How the initial fill chooses a pod for each generated replenishment order.
#[derive(Clone, Copy, Debug)]
pub enum Placement<'a> {
    Random,
    /// Fill the emptiest pod and keep using it while orders fit.
    Emptiest,
    /// Lowest cost first, e.g. travel time to the nearest replenishment station.
    Nearest { pod_cost: &'a [f64] },
    /// Pod offering the fewest demanded units, for a fixed demand per SKU.
    LeastDemand { demand: &'a [u64] },
    /// Emptiest pod of the SKU's class, sticky per class.
    Class { sku_class: &'a [u8] },
}

/// Draws replenishment orders and places them until utilization reaches
/// `target`. Orders that fit nowhere are discarded.
pub fn generate_initial_inventory<R: rand::Rng>(
    ledger: &mut StockLedger,
    target: f64,
    placement: Placement<'_>,
    mut draw: impl FnMut(&mut R) -> (SkuId, u32),
    rng: &mut R,
) {
    let n = ledger.pods.len();
    if n == 0 || target <= 0.0 {
        return;
    }
    let mut sticky: [Option<PodId>; 256] = [None; 256];
    let mut demand_score: Vec<u64> = match placement {
        Placement::LeastDemand { demand } => ledger
            .pods
            .iter()
            .map(|p| p.items.iter().map(|it| (it.units as u64).min(demand[it.sku.index()])).sum())
            .collect(),
        _ => Vec::new(),
    };
    let mut misses = 0;
    while ledger.utilization() < target && misses < 1000 {
        let (sku, units) = draw(rng);
        let slots = units * ledger.sku(sku).unit_size;
        let fits = |p: &Pod| p.free_slots() >= slots;
        let choice = match placement {
            Placement::Random => {
                let fitting: Vec<usize> = (0..n).filter(|&i| fits(&ledger.pods[i])).collect();
                (!fitting.is_empty()).then(|| PodId(fitting[rng.gen_range(0..fitting.len())] as u32))
            }
            Placement::Emptiest | Placement::Class { .. } => {
                let class = match placement {
                    Placement::Class { sku_class } => Some(sku_class[sku.index()]),
                    _ => None,
                };
                let key = class.unwrap_or(0) as usize;
                match sticky[key].filter(|p| fits(ledger.pod(*p))) {
                    Some(p) => Some(p),
                    None => {
                        let best = ledger
                            .pods
                            .iter()
                            .filter(|p| fits(p) && class.map_or(true, |c| p.class == c))
                            .min_by_key(|p| (p.occupied + p.reserved_in, p.id))
                            .map(|p| p.id);
                        sticky[key] = best;
                        best
                    }
                }
            }
            Placement::Nearest { pod_cost } => ledger
                .pods
                .iter()
                .filter(|p| fits(p))
                .min_by(|a, b| pod_cost[a.id.index()].total_cmp(&pod_cost[b.id.index()]).then(a.id.cmp(&b.id)))
                .map(|p| p.id),
            Placement::LeastDemand { .. } => ledger
                .pods
                .iter()
                .filter(|p| fits(p))
                .min_by_key(|p| (demand_score[p.id.index()], p.id))
                .map(|p| p.id),
        };
        match choice {
            Some(pod) => {
                if let Placement::LeastDemand { demand } = placement {
                    let before = (ledger.pod(pod).units(sku) as u64).min(demand[sku.index()]);
                    let after = ((ledger.pod(pod).units(sku) + units) as u64).min(demand[sku.index()]);
                    demand_score[pod.index()] += after - before;
                }
                ledger.place(pod, sku, units).expect("placement checked for space");
                misses = 0;
            }
            None => misses += 1,
        }
    }
    ledger.mark_initial();
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn ledger() -> StockLedger {
        let skus = (0..3).map(|i| Sku { id: SkuId(i), unit_size: 4, popularity_weight: 1.0 }).collect();
        let pods = (0..2).map(|i| Pod::new(PodId(i), 500, PodLocation::Transit)).collect();
        StockLedger::new(skus, pods)
    }

    #[test]
    fn pick_reservations() {
        let mut l = ledger();
        l.place(PodId(0), SkuId(0), 3).unwrap();
        let r = l.reserve_pick(PodId(0), SkuId(0), 2).unwrap();
        assert_eq!(l.pod(PodId(0)).reserved_out(SkuId(0)), 2);
        assert!(matches!(
            l.reserve_pick(PodId(0), SkuId(0), 2),
            Err(InventoryError::InsufficientUnits { available: 1, .. })
        ));
        l.commit_pick(r);
        assert_eq!(l.pod(PodId(0)).units(SkuId(0)), 1);
        assert_eq!(l.pod(PodId(0)).reserved_out(SkuId(0)), 0);
        l.check().unwrap();
    }

    #[test]
    fn put_reservations() {
        let mut l = ledger();
        let r = l.reserve_replenishment_space(PodId(0), SkuId(1), 10).unwrap();
        assert_eq!(r.slots, 40);
        assert_eq!(l.pod(PodId(0)).reserved_in, 40);
        l.cancel_put(r);
        // 480 occupied slots leave no room for 40 more.
        l.place(PodId(1), SkuId(2), 120).unwrap();
        assert!(matches!(
            l.reserve_replenishment_space(PodId(1), SkuId(1), 10),
            Err(InventoryError::InsufficientSpace { free: 20, .. })
        ));
        assert_eq!(l.reserve_replenishment_space(PodId(0), SkuId(1), 0), Err(InventoryError::Empty));
    }

    #[test]
    fn conservation_and_utilization() {
        let mut l = ledger();
        l.place(PodId(0), SkuId(0), 10).unwrap();
        l.mark_initial();
        let u0 = l.utilization();
        let r = l.reserve_replenishment_space(PodId(1), SkuId(0), 5).unwrap();
        l.commit_put(r);
        assert!(l.utilization() > u0);
        let u1 = l.utilization();
        let p = l.reserve_pick(PodId(0), SkuId(0), 4).unwrap();
        l.commit_pick(p);
        assert!(l.utilization() < u1);
        assert_eq!(l.availability(SkuId(0)), 11);
        l.check().unwrap();
    }

    #[test]
    fn initial_fill_hits_target() {
        let skus: Vec<Sku> = (0..20).map(|i| Sku { id: SkuId(i), unit_size: 2 + i % 7, popularity_weight: 1.0 }).collect();
        let class: Vec<u8> = (0..20).map(|i| (i % 3) as u8).collect();
        for which in 0..5 {
            let mut pods: Vec<Pod> = (0..30).map(|i| Pod::new(PodId(i), 500, PodLocation::Transit)).collect();
            for (i, c) in share_classes(30, &[0.1, 0.3, 1.0]).into_iter().enumerate() {
                pods[i].class = c;
            }
            let mut l = StockLedger::new(skus.clone(), pods);
            let cost: Vec<f64> = (0..30).map(|i| i as f64).collect();
            let demand: Vec<u64> = (0..20).map(|i| i as u64).collect();
            let placement = match which {
                0 => Placement::Random,
                1 => Placement::Emptiest,
                2 => Placement::Nearest { pod_cost: &cost },
                3 => Placement::LeastDemand { demand: &demand },
                _ => Placement::Class { sku_class: &class },
            };
            let mut rng = crate::rng::stream(5, which);
            let draw = |r: &mut crate::rng::SimRng| (SkuId(r.gen_range(0..20)), r.gen_range(4..=12));
            generate_initial_inventory(&mut l, 0.7, placement, draw, &mut rng);
            assert!((0.68..=0.72).contains(&l.utilization()), "{which}: {}", l.utilization());
            l.check().unwrap();
            if which == 4 {
                for p in &l.pods {
                    assert!(p.items().iter().all(|it| class[it.sku.index()] == p.class));
                }
            }
        }
        let mut l = ledger();
        let mut rng = crate::rng::stream(1, 1);
        generate_initial_inventory(&mut l, 0.0, Placement::Random, |_: &mut crate::rng::SimRng| (SkuId(0), 4), &mut rng);
        assert_eq!(l.utilization(), 0.0);
    }

    #[test]
    fn classes_by_share() {
        let c = frequency_classes(&[1.0; 10], &[0.1, 0.3, 1.0]);
        assert_eq!(c, [0, 1, 1, 2, 2, 2, 2, 2, 2, 2]);
        // A dominant SKU swallows the middle class.
        let c = frequency_classes(&[1.0, 8.0, 0.5, 0.5], &[0.1, 0.3, 1.0]);
        assert_eq!(c, [2, 0, 2, 2]);
        let p = share_classes(10, &[0.1, 0.3, 1.0]);
        assert_eq!(p, [0, 1, 1, 2, 2, 2, 2, 2, 2, 2]);
    }
}
