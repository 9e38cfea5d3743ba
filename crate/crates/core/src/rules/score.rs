//! Candidate scores of the order-assignment and pod-selection rules.
//!
//! `C(p, i)` is the pod's stock of SKU `i` net of pick reservations, `L(o, i)`
//! an order's required units and `D(o, i)` its demand still open for the
//! purpose of the decision.

use crate::{PodId, SkuId};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PodView<'a> {
    pub id: PodId,
    /// `(sku, units)` sorted by SKU, units > 0.
    pub contents: &'a [(SkuId, u32)],
}

impl PodView<'_> {
    pub fn units(&self, sku: SkuId) -> u32 {
        self.contents.binary_search_by_key(&sku, |e| e.0).map_or(0, |i| self.contents[i].1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LineView {
    pub sku: SkuId,
    /// `L(o, i)`.
    pub required: u32,
    /// `D(o, i)`.
    pub demand: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderView<'a> {
    pub lines: &'a [LineView],
    pub submit: f64,
    pub due: f64,
    /// `t^S_o`, when assigned to a station.
    pub assigned_at: Option<f64>,
}

impl OrderView<'_> {
    fn total_demand(&self) -> u32 {
        self.lines.iter().map(|l| l.demand).sum()
    }
}

/// Every line of the order can be served completely from `pod`.
pub fn fast_lane_eligible(order: &OrderView<'_>, pod: &PodView<'_>) -> bool {
    order.lines.iter().all(|l| l.required <= pod.units(l.sku))
}

/// Lines shared with the station's orders, summed over those orders.
pub fn common_lines_score(order: &OrderView<'_>, station_orders: &[OrderView<'_>]) -> u32 {
    station_orders
        .iter()
        .map(|o| {
            order
                .lines
                .iter()
                .filter(|l| l.required > 0 && o.lines.iter().any(|m| m.sku == l.sku && m.required > 0))
                .count() as u32
        })
        .sum()
}

fn covered(pod: &PodView<'_>, order: &OrderView<'_>) -> u64 {
    order.lines.iter().map(|l| pod.units(l.sku).min(l.demand) as u64).sum()
}

/// Units of the order available on the pods heading to the station.
pub fn pod_match_score(order: &OrderView<'_>, inbound: &[PodView<'_>]) -> u64 {
    inbound.iter().map(|p| covered(p, order)).sum()
}

/// Units of the station's open demand the pod offers, counted per order.
pub fn pile_on_score(pod: &PodView<'_>, station_orders: &[OrderView<'_>]) -> u64 {
    station_orders.iter().map(|o| covered(pod, o)).sum()
}

/// Station orders with open demand that the pod alone can finish.
pub fn completable_orders(pod: &PodView<'_>, station_orders: &[OrderView<'_>]) -> u32 {
    station_orders
        .iter()
        .filter(|o| o.total_demand() > 0 && o.lines.iter().all(|l| l.demand <= pod.units(l.sku)))
        .count() as u32
}

/// Units of the backlog's demand the pod offers, counted per order.
pub fn demand_score(pod: &PodView<'_>, backlog: &[OrderView<'_>]) -> u64 {
    backlog.iter().map(|o| covered(pod, o)).sum()
}

fn weighted(pod: &PodView<'_>, orders: &[OrderView<'_>], weight: impl Fn(&OrderView<'_>) -> f64) -> f64 {
    orders
        .iter()
        .map(|o| {
            let total = o.total_demand();
            if total == 0 {
                return 0.0;
            }
            covered(pod, o) as f64 / total as f64 * weight(o)
        })
        .sum()
}

/// Offered share of each order's open units, weighted by how late it is.
pub fn lateness_score(pod: &PodView<'_>, station_orders: &[OrderView<'_>], now: f64) -> f64 {
    weighted(pod, station_orders, |o| (now - o.due).max(0.0))
}

/// Lateness with the due time itself as the weight; used when no order is late.
pub fn lateness_fallback_score(pod: &PodView<'_>, station_orders: &[OrderView<'_>]) -> f64 {
    weighted(pod, station_orders, |o| o.due)
}

/// Offered share of each order's open units, weighted by time at the station.
pub fn age_score(pod: &PodView<'_>, station_orders: &[OrderView<'_>], now: f64) -> f64 {
    weighted(pod, station_orders, |o| now - o.assigned_at.unwrap_or(now))
}
