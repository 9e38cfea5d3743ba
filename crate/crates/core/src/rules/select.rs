//! Candidate selection per rule, with seeded random tie-breaking.

use alloc::vec::Vec;

use rand::Rng;

use super::score::*;
use super::{PoaRule, PpsRule, PsaRule, RpsRule};
use crate::{CellId, PodId};

const REL_EPS: f64 = 1e-9;

fn tol(x: f64) -> f64 {
    REL_EPS * x.abs().max(1.0)
}

/// Indices whose score equals the maximum up to a relative tolerance.
pub fn ties_max(scores: &[f64]) -> Vec<usize> {
    let best = scores.iter().copied().filter(|s| !s.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Vec::new();
    }
    let t = tol(best);
    (0..scores.len()).filter(|&i| scores[i] >= best - t).collect()
}

pub fn ties_min(scores: &[f64]) -> Vec<usize> {
    let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
    ties_max(&neg)
}

fn pick<R: Rng + ?Sized>(ties: &[usize], rng: &mut R) -> Option<usize> {
    match ties.len() {
        0 => None,
        1 => Some(ties[0]),
        n => Some(ties[rng.gen_range(0..n)]),
    }
}

fn argmax<R: Rng + ?Sized>(scores: &[f64], rng: &mut R) -> Option<usize> {
    pick(&ties_max(scores), rng)
}

fn argmin<R: Rng + ?Sized>(scores: &[f64], rng: &mut R) -> Option<usize> {
    pick(&ties_min(scores), rng)
}

fn uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Option<usize> {
    (n > 0).then(|| rng.gen_range(0..n))
}

#[derive(Clone, Copy, Debug)]
pub struct PoaContext<'a> {
    pub now: f64,
    pub backlog: &'a [OrderView<'a>],
    pub station_orders: &'a [OrderView<'a>],
    pub inbound: &'a [PodView<'a>],
    /// Pod the station works on next, for Fast-Lane.
    pub next_pod: Option<PodView<'a>>,
    /// The slot being filled is the station's fast-lane slot.
    pub fast_lane_slot: bool,
}

/// Backlog index of the order to assign, or `None` to leave the slot open.
pub fn poa_select<R: Rng + ?Sized>(rule: PoaRule, ctx: &PoaContext<'_>, rng: &mut R) -> Option<usize> {
    let b = ctx.backlog;
    match rule {
        PoaRule::Random => uniform(b.len(), rng),
        PoaRule::Fcfs => argmin(&b.iter().map(|o| o.submit).collect::<Vec<_>>(), rng),
        PoaRule::DueTime => argmin(&b.iter().map(|o| o.due).collect::<Vec<_>>(), rng),
        PoaRule::FastLane => {
            if !ctx.fast_lane_slot {
                return uniform(b.len(), rng);
            }
            let pod = ctx.next_pod?;
            let eligible: Vec<usize> = (0..b.len()).filter(|&i| fast_lane_eligible(&b[i], &pod)).collect();
            pick(&eligible, rng)
        }
        PoaRule::CommonLines => argmax(
            &b.iter().map(|o| common_lines_score(o, ctx.station_orders) as f64).collect::<Vec<_>>(),
            rng,
        ),
        PoaRule::PodMatch => argmax(&b.iter().map(|o| pod_match_score(o, ctx.inbound) as f64).collect::<Vec<_>>(), rng),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PpsContext<'a> {
    pub now: f64,
    /// Pods offering at least one useful unit for the station.
    pub candidates: &'a [PodView<'a>],
    /// Estimated travel time from each candidate to the station.
    pub travel: &'a [f64],
    pub station_orders: &'a [OrderView<'a>],
    pub backlog: &'a [OrderView<'a>],
}

/// Candidate index of the pod to bring, or `None` if there is none.
pub fn pps_select<R: Rng + ?Sized>(rule: PpsRule, ctx: &PpsContext<'_>, rng: &mut R) -> Option<usize> {
    let c = ctx.candidates;
    let so = ctx.station_orders;
    match rule {
        PpsRule::Random => uniform(c.len(), rng),
        PpsRule::Nearest => argmin(ctx.travel, rng),
        PpsRule::PileOn => {
            let first = ties_max(&c.iter().map(|p| pile_on_score(p, so) as f64).collect::<Vec<_>>());
            let second: Vec<f64> = first.iter().map(|&i| completable_orders(&c[i], so) as f64).collect();
            let ties: Vec<usize> = ties_max(&second).into_iter().map(|k| first[k]).collect();
            pick(&ties, rng)
        }
        PpsRule::Demand => argmax(&c.iter().map(|p| demand_score(p, ctx.backlog) as f64).collect::<Vec<_>>(), rng),
        PpsRule::Lateness => {
            let mut scores: Vec<f64> = c.iter().map(|p| lateness_score(p, so, ctx.now)).collect();
            if scores.iter().all(|&s| s <= 0.0) {
                scores = c.iter().map(|p| lateness_fallback_score(p, so)).collect();
            }
            argmax(&scores, rng)
        }
        PpsRule::Age => argmax(&c.iter().map(|p| age_score(p, so, ctx.now)).collect::<Vec<_>>(), rng),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RpsCandidate {
    pub id: PodId,
    /// Occupied plus reserved slots.
    pub fill: u32,
    /// Travel time between pod and replenishment station.
    pub travel: f64,
    /// Units offered against current pick demand, `Σ_i min(C(p,i), demand_i)`.
    pub offered_demand: u64,
    pub class: u8,
}

/// Candidate index of the pod to receive the order.
pub fn rps_select<R: Rng + ?Sized>(rule: RpsRule, c: &[RpsCandidate], order_class: u8, rng: &mut R) -> Option<usize> {
    match rule {
        RpsRule::Random => uniform(c.len(), rng),
        RpsRule::Emptiest => argmin(&c.iter().map(|p| p.fill as f64).collect::<Vec<_>>(), rng),
        RpsRule::Nearest => argmin(&c.iter().map(|p| p.travel).collect::<Vec<_>>(), rng),
        RpsRule::LeastDemand => argmin(&c.iter().map(|p| p.offered_demand as f64).collect::<Vec<_>>(), rng),
        RpsRule::Class => {
            let same: Vec<usize> = (0..c.len()).filter(|&i| c[i].class == order_class).collect();
            let fill: Vec<f64> = same.iter().map(|&i| c[i].fill as f64).collect();
            pick(&ties_min(&fill), rng).map(|k| same[k])
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsaCandidate {
    pub cell: CellId,
    /// Travel time from the robot to the location, carrying.
    pub travel: f64,
    /// Travel time from the location to its nearest pick station.
    pub station_time: f64,
    pub class: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PsaChoice {
    pub index: usize,
    /// Class rule had to leave the pod's own class.
    pub fallback: bool,
}

/// Candidate index of the storage location. `home` is the pod's fixed home
/// among the candidates.
pub fn psa_select<R: Rng + ?Sized>(
    rule: PsaRule,
    c: &[PsaCandidate],
    home: Option<usize>,
    pod_class: u8,
    rng: &mut R,
) -> Option<PsaChoice> {
    let plain = |index| PsaChoice { index, fallback: false };
    match rule {
        PsaRule::Random => uniform(c.len(), rng).map(plain),
        PsaRule::Fixed => home.map(plain),
        PsaRule::Nearest => argmin(&c.iter().map(|l| l.travel).collect::<Vec<_>>(), rng).map(plain),
        PsaRule::StationBased => argmin(&c.iter().map(|l| l.station_time).collect::<Vec<_>>(), rng).map(plain),
        PsaRule::Class => {
            let max_class = c.iter().map(|l| l.class).max()?;
            for d in 0..=max_class.max(pod_class) {
                let ok = |k: u8| k.abs_diff(pod_class) == d;
                let within: Vec<usize> = (0..c.len()).filter(|&i| ok(c[i].class)).collect();
                if within.is_empty() {
                    continue;
                }
                let times: Vec<f64> = within.iter().map(|&i| c[i].travel).collect();
                let k = argmin(&times, rng)?;
                return Some(PsaChoice { index: within[k], fallback: d > 0 });
            }
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::SkuId;

    #[test]
    fn ties_use_relative_tolerance() {
        assert_eq!(ties_max(&[1.0, 3.0, 3.0 + 1e-12, 2.0]), [1, 2]);
        assert_eq!(ties_min(&[5.0, 4.0, 4.0]), [1, 2]);
        assert!(ties_max(&[]).is_empty());
    }

    #[test]
    fn fast_lane_leaves_slot_open() {
        let l = [LineView { sku: SkuId(0), required: 2, demand: 2 }];
        let backlog = [OrderView { lines: &l, submit: 0.0, due: 0.0, assigned_at: None }];
        let c = [(SkuId(0), 1)];
        let ctx = PoaContext {
            now: 0.0,
            backlog: &backlog,
            station_orders: &[],
            inbound: &[],
            next_pod: Some(PodView { id: PodId(0), contents: &c }),
            fast_lane_slot: true,
        };
        assert_eq!(poa_select(PoaRule::FastLane, &ctx, &mut stream(1, 1)), None);
        let ctx = PoaContext { fast_lane_slot: false, ..ctx };
        assert_eq!(poa_select(PoaRule::FastLane, &ctx, &mut stream(1, 1)), Some(0));
    }

    #[test]
    fn nearest_psa_and_class_fallback() {
        let c = [
            PsaCandidate { cell: CellId(0), travel: 9.0, station_time: 1.0, class: 0 },
            PsaCandidate { cell: CellId(1), travel: 4.0, station_time: 2.0, class: 2 },
        ];
        let mut rng = stream(2, 2);
        assert_eq!(psa_select(PsaRule::Nearest, &c, None, 0, &mut rng).unwrap().index, 1);
        assert_eq!(psa_select(PsaRule::StationBased, &c, None, 0, &mut rng).unwrap().index, 0);
        assert_eq!(psa_select(PsaRule::Class, &c, None, 2, &mut rng), Some(PsaChoice { index: 1, fallback: false }));
        assert_eq!(psa_select(PsaRule::Class, &c, None, 1, &mut rng).unwrap().fallback, true);
        assert_eq!(psa_select(PsaRule::Fixed, &c, Some(0), 1, &mut rng).unwrap().index, 0);
    }

    #[test]
    fn emptiest_rps() {
        let mk = |id, fill| RpsCandidate { id: PodId(id), fill, travel: 0.0, offered_demand: 0, class: 0 };
        let c = [mk(0, 100), mk(1, 250), mk(2, 400)];
        assert_eq!(rps_select(RpsRule::Emptiest, &c, 0, &mut stream(3, 3)), Some(0));
    }
}
