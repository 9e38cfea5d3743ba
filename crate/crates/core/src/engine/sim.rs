use alloc::collections::{BTreeMap, BinaryHeap, VecDeque};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use hashbrown::HashMap;
use rand::Rng;

use super::trace::TraceHasher;
use super::{RunConfig, RunOutcome, RunStats, SimError, TraceEvent, TraceSink};
use crate::dispatch::{allocate_robots, Phase};
use crate::inventory::{
    frequency_classes, generate_initial_inventory, share_classes, PickReservation, Placement, Pod, PodLocation,
    PutReservation, StockLedger,
};
use crate::layout::{build_layout, Layout, PathTimes, Search, StationKind, StationRef};
use crate::metrics::{compute_metrics, CompletedOrder, RunTrace, UpperBoundTimes};
use crate::motion::{Heading, PlanError, PlanRequest, Planner, ReservationTable, OPEN};
use crate::orders::{GenerationPauses, OrderGenerator, OrderState, PickOrder, ReplenishmentOrder, SkuCatalog};
use crate::rng::{derive_seed, stream, SimRng};
use crate::rules::{LineView, OrderView, PodView};
use crate::rules::{
    poa_select, pps_select, psa_select, rps_select, PoaContext, PpsContext, PsaCandidate, RpsCandidate,
};
use crate::rules::{PoaRule, PsaRule, RoaRule, RpsRule};
use crate::{CellId, OrderId, PodId, RobotId, SkuId};

const TAG_CATALOG: u64 = 1;
const TAG_ORDERS: u64 = 2;
const TAG_INVENTORY: u64 = 3;
const TAG_RULES: u64 = 4;
const TAG_PLACEMENT: u64 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EventKind {
    /// Travel, lift or set-down finished.
    LegDone(RobotId),
    /// The robot portion of a pick is over.
    PickDone(u32),
    /// The picker finished handling a unit.
    HandleDone(u32),
    PutDone(u32),
    /// Retry a failed plan; stale unless the token matches.
    Replan(RobotId, u64),
    Snapshot,
}

struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, o: &Self) -> Ordering {
        o.time.total_cmp(&self.time).then_with(|| o.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

struct Bot {
    id: RobotId,
    cell: CellId,
    heading: Heading,
    phase: Phase,
    station: Option<StationRef>,
    /// A travel, lift or set-down is underway.
    moving: bool,
    /// Queue position the current trip leads to.
    heading_for: usize,
    /// Robot still sits in a station lane.
    in_lane: Option<StationRef>,
    /// Done at the access point but no storage location was free.
    release_pending: bool,
    distance: f64,
    pending_distance: f64,
    failures: u32,
    token: u64,
}

#[derive(Default)]
struct Lane {
    robots: Vec<RobotId>,
    waiting: VecDeque<RobotId>,
}

struct PickStation {
    r: StationRef,
    active: bool,
    orders: Vec<OrderId>,
    fast: Option<OrderId>,
    lane: Lane,
    serving: Option<RobotId>,
    unit_busy: bool,
    visit_fresh: bool,
    picker_free: f64,
    handling: VecDeque<(OrderId, SkuId)>,
    busy: f64,
}

struct Insertion {
    order: ReplenishmentOrder,
    res: PutReservation,
}

struct ReplStation {
    r: StationRef,
    active: bool,
    used: u32,
    pending: Vec<Insertion>,
    lane: Lane,
    serving: Option<RobotId>,
    putting: Option<Insertion>,
}

#[derive(Clone, Copy)]
struct Alloc {
    order: OrderId,
    sku: SkuId,
    units: u32,
}

#[derive(Default)]
struct PodState {
    claim: Option<RobotId>,
    /// Replenishment station the pod's pending insertions wait at.
    bound: Option<u32>,
    home: Option<CellId>,
    allocs: Vec<Alloc>,
}

pub(crate) struct Sim<'s> {
    cfg: RunConfig,
    layout: Layout,
    planner: Planner,
    table: ReservationTable,
    from_cache: HashMap<(CellId, bool), PathTimes>,
    from_order: VecDeque<(CellId, bool)>,
    ledger: StockLedger,
    gen: OrderGenerator,
    pauses: GenerationPauses,
    orders_rng: SimRng,
    rules_rng: SimRng,
    bots: Vec<Bot>,
    picks: Vec<PickStation>,
    repls: Vec<ReplStation>,
    pods: Vec<PodState>,
    cell_pod: Vec<Option<PodId>>,
    cell_robot: Vec<Option<RobotId>>,
    /// Storage cells kept free for a Fixed-rule pod.
    home_of: Vec<Option<PodId>>,
    station_time: Vec<f64>,
    location_class: Vec<u8>,
    sku_class: Vec<u8>,
    orders: BTreeMap<OrderId, PickOrder>,
    backlog: Vec<OrderId>,
    repl_backlog: VecDeque<ReplenishmentOrder>,
    /// Remaining units of open pick orders per SKU.
    demand: Vec<u64>,
    sticky: [Option<PodId>; 4],
    events: BinaryHeap<Event>,
    seq: u64,
    now: f64,
    hasher: TraceHasher,
    sink: Option<&'s mut dyn TraceSink>,
    completed: Vec<CompletedOrder>,
    stats: RunStats,
}

fn config_error(what: &str) -> SimError {
    SimError::Config(format!("{what}"))
}

impl<'s> Sim<'s> {
    pub(crate) fn new(config: &RunConfig, sink: Option<&'s mut dyn TraceSink>) -> Result<Self, SimError> {
        let cfg = config.clone();
        let ws = cfg.scenario;
        if !(cfg.horizon >= 0.0) || !cfg.horizon.is_finite() {
            return Err(config_error("horizon must be a finite number of seconds >= 0"));
        }
        if ws.pick_stations == 0 || ws.robots_per_station == 0 || ws.sku_count == 0 {
            return Err(config_error("scenario needs stations, robots and SKUs"));
        }
        if !(0.0..=1.0).contains(&ws.return_share) {
            return Err(config_error("return_share must lie in [0, 1]"));
        }
        let sp = &cfg.sim;
        if sp.unit_size_min == 0 || sp.unit_size_min > sp.unit_size_max || sp.unit_size_max > sp.pod_capacity {
            return Err(config_error("unit sizes must satisfy 0 < min <= max <= pod capacity"));
        }
        if sp.pick_station_capacity == 0 || !(sp.retry_delay > 0.0) || !(sp.check_interval > 0.0) {
            return Err(config_error("station capacity, retry delay and check interval must be positive"));
        }
        cfg.kinematics.validate().map_err(|e| config_error(&format!("{e}")))?;
        let o = &cfg.orders;
        if o.repl_units_min == 0 || o.repl_units_min > o.repl_units_max || o.pick_backlog == 0 {
            return Err(config_error("order parameters out of range"));
        }

        let mut lc = cfg.layout.clone();
        lc.pick_stations = ws.pick_stations;
        let layout = build_layout(&lc, cfg.kinematics)?;
        let n_robots = ws.robots() as usize;
        let base = derive_seed(cfg.seed, &[cfg.repetition as u64]);

        let catalog = SkuCatalog::random(
            ws.sku_count as usize,
            sp.popularity_lambda,
            sp.unit_size_min,
            sp.unit_size_max,
            &mut stream(base, TAG_CATALOG),
        );
        let sku_class = frequency_classes(&catalog.weights(), &sp.class_bounds);

        let mut place_rng = stream(base, TAG_PLACEMENT);
        let storage: Vec<CellId> = layout.storage_locations().to_vec();
        let mut cells = storage.clone();
        for i in (1..cells.len()).rev() {
            let j = place_rng.gen_range(0..=i);
            cells.swap(i, j);
        }
        let n_pods = lc.pods as usize;
        let pod_class = share_classes(n_pods, &sp.class_bounds);
        let mut cell_pod = vec![None; layout.len()];
        let pods: Vec<Pod> = (0..n_pods)
            .map(|i| {
                let mut p = Pod::new(PodId(i as u32), sp.pod_capacity, PodLocation::Stored(cells[i]));
                p.class = pod_class[i];
                cell_pod[cells[i].index()] = Some(p.id);
                p
            })
            .collect();
        if n_pods + n_robots > storage.len() {
            return Err(config_error("not enough free storage locations to park every robot"));
        }

        let mut planner = Planner::new(cfg.planner);
        let mut station_time = vec![f64::INFINITY; layout.len()];
        for st in layout.stations(StationKind::Pick) {
            let t = planner.times_to(&layout, st.access, true);
            for &c in &storage {
                if let Some(x) = t.at(c) {
                    station_time[c.index()] = station_time[c.index()].min(x);
                }
            }
        }
        let mut by_time = storage.clone();
        by_time.sort_by(|a, b| station_time[a.index()].total_cmp(&station_time[b.index()]).then(a.cmp(b)));
        let classes = share_classes(by_time.len(), &sp.class_bounds);
        let mut location_class = vec![u8::MAX; layout.len()];
        for (k, c) in by_time.iter().enumerate() {
            location_class[c.index()] = classes[k];
        }

        let mut gen = OrderGenerator::new(catalog.clone(), cfg.orders.clone());
        let mut orders_rng = stream(base, TAG_ORDERS);
        let mut orders = BTreeMap::new();
        let mut backlog = Vec::new();
        let mut demand = vec![0u64; ws.sku_count as usize];
        for _ in 0..cfg.orders.pick_backlog {
            let o = gen.generate_pick_order(ws.order_size, &mut orders_rng, 0.0)?;
            for l in &o.lines {
                demand[l.sku.index()] += l.required as u64;
            }
            backlog.push(o.id);
            orders.insert(o.id, o);
        }

        let mut ledger = StockLedger::new(catalog.skus.clone(), pods);
        let repl_cost: Vec<f64> = {
            let mut cost = vec![f64::INFINITY; n_pods];
            for st in layout.stations(StationKind::Replenishment) {
                let t = planner.times_to(&layout, st.access, true);
                for (i, c) in cost.iter_mut().enumerate() {
                    if let Some(x) = t.at(cells[i]) {
                        *c = c.min(x);
                    }
                }
            }
            cost
        };
        let placement = match cfg.rules.rps() {
            RpsRule::Random => Placement::Random,
            RpsRule::Emptiest => Placement::Emptiest,
            RpsRule::Nearest => Placement::Nearest { pod_cost: &repl_cost },
            RpsRule::LeastDemand => Placement::LeastDemand { demand: &demand },
            RpsRule::Class => Placement::Class { sku_class: &sku_class },
        };
        let (umin, umax) = (cfg.orders.repl_units_min, cfg.orders.repl_units_max);
        generate_initial_inventory(
            &mut ledger,
            sp.initial_utilization,
            placement,
            |rng: &mut SimRng| (catalog.draw_sku(rng), rng.gen_range(umin..=umax)),
            &mut stream(base, TAG_INVENTORY),
        );

        let mut pod_states: Vec<PodState> = (0..n_pods).map(|_| PodState::default()).collect();
        let mut home_of = vec![None; layout.len()];
        if cfg.rules.psa() == PsaRule::Fixed {
            for (i, ps) in pod_states.iter_mut().enumerate() {
                ps.home = Some(cells[i]);
                home_of[cells[i].index()] = Some(PodId(i as u32));
            }
        }

        let mut table = ReservationTable::new(layout.len(), n_robots);
        let mut cell_robot = vec![None; layout.len()];
        let bots: Vec<Bot> = (0..n_robots)
            .map(|k| {
                let id = RobotId(k as u32);
                let cell = cells[n_pods + k];
                table.reserve(cell, id, 0, OPEN);
                cell_robot[cell.index()] = Some(id);
                Bot {
                    id,
                    cell,
                    heading: Heading::North,
                    phase: Phase::Idle,
                    station: None,
                    moving: false,
                    heading_for: 0,
                    in_lane: None,
                    release_pending: false,
                    distance: 0.0,
                    pending_distance: 0.0,
                    failures: 0,
                    token: 0,
                }
            })
            .collect();

        let picks = layout
            .stations(StationKind::Pick)
            .iter()
            .map(|g| PickStation {
                r: g.id,
                active: true,
                orders: Vec::new(),
                fast: None,
                lane: Lane::default(),
                serving: None,
                unit_busy: false,
                visit_fresh: false,
                picker_free: 0.0,
                handling: VecDeque::new(),
                busy: 0.0,
            })
            .collect();
        let repls = layout
            .stations(StationKind::Replenishment)
            .iter()
            .map(|g| ReplStation {
                r: g.id,
                active: true,
                used: 0,
                pending: Vec::new(),
                lane: Lane::default(),
                serving: None,
                putting: None,
            })
            .collect();

        let mut repl_backlog = VecDeque::new();
        for _ in 0..cfg.orders.repl_backlog {
            repl_backlog.push_back(gen.generate_replenishment_order(ws.return_share, &mut orders_rng));
        }

        Ok(Self {
            rules_rng: stream(base, TAG_RULES),
            cfg,
            layout,
            planner,
            table,
            from_cache: HashMap::new(),
            from_order: VecDeque::new(),
            ledger,
            gen,
            pauses: GenerationPauses::default(),
            orders_rng,
            bots,
            picks,
            repls,
            pods: pod_states,
            cell_pod,
            cell_robot,
            home_of,
            station_time,
            location_class,
            sku_class,
            orders,
            backlog,
            repl_backlog,
            demand,
            sticky: [None; 4],
            events: BinaryHeap::new(),
            seq: 0,
            now: 0.0,
            hasher: TraceHasher::default(),
            sink,
            completed: Vec::new(),
            stats: RunStats::default(),
        })
    }

    pub(crate) fn run(mut self) -> Result<RunOutcome, SimError> {
        let horizon = self.cfg.horizon;
        if horizon > 0.0 {
            self.start()?;
            while let Some(ev) = self.events.pop() {
                if ev.time > horizon {
                    break;
                }
                debug_assert!(ev.time >= self.now, "clock ran backwards");
                self.now = ev.time;
                self.stats.events += 1;
                self.handle(ev.kind)?;
            }
        }
        self.ledger.check().map_err(|what| SimError::Invariant { time: self.now, what })?;
        Ok(self.finish())
    }

    fn finish(mut self) -> RunOutcome {
        let horizon = self.cfg.horizon;
        let trace = RunTrace {
            horizon,
            units_picked: self.stats.units_picked,
            pick_pod_visits: self.stats.pick_pod_visits,
            completed: core::mem::take(&mut self.completed),
            robot_distance: self.bots.iter().map(|b| b.distance).collect(),
            station_busy: self.picks.iter().map(|s| s.busy).collect(),
        };
        let t = &self.cfg.sim.timing;
        let times =
            UpperBoundTimes::for_stations(&self.cfg.kinematics, t.t_pick, t.t_handle, self.picks.len() as u32, 1.0);
        let metrics = compute_metrics(&trace, &times);
        self.stats.planner_expansions = self.planner.expansions;
        self.stats.final_utilization = self.ledger.utilization();
        RunOutcome { metrics, stats: self.stats, trace, trace_hash: self.hasher.0 }
    }

    fn schedule(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.events.push(Event { time, seq: self.seq, kind });
    }

    fn record(&mut self, event: TraceEvent) {
        self.hasher.add(self.now, &event);
        if let Some(s) = self.sink.as_mut() {
            s.record(self.now, &event);
        }
    }

    fn start(&mut self) -> Result<(), SimError> {
        let ci = self.cfg.sim.check_interval;
        if ci <= self.cfg.horizon {
            self.schedule(ci, EventKind::Snapshot);
        }
        self.pauses.update_generation_pauses(self.ledger.utilization(), &self.cfg.orders);
        self.apply_activity();
        for s in 0..self.picks.len() {
            self.fill_slots(s)?;
        }
        self.assign_replenishment();
        for k in 0..self.bots.len() {
            self.advance(RobotId(k as u32))?;
        }
        Ok(())
    }

    fn handle(&mut self, kind: EventKind) -> Result<(), SimError> {
        match kind {
            EventKind::LegDone(r) => self.leg_done(r),
            EventKind::PickDone(s) => self.pick_done(s as usize),
            EventKind::HandleDone(s) => self.handle_done(s as usize),
            EventKind::PutDone(s) => self.put_done(s as usize),
            EventKind::Replan(r, token) => {
                if self.bots[r.index()].token == token && !self.bots[r.index()].moving {
                    self.advance(r)?;
                }
                Ok(())
            }
            EventKind::Snapshot => {
                self.ledger.check().map_err(|what| SimError::Invariant { time: self.now, what })?;
                debug_assert!(self.table.conflicts().is_empty(), "reservation conflict");
                let next = self.now + self.cfg.sim.check_interval;
                if next <= self.cfg.horizon {
                    self.schedule(next, EventKind::Snapshot);
                }
                Ok(())
            }
        }
    }

    // ---- stations and activity -------------------------------------------

    fn lane(&mut self, st: StationRef) -> &mut Lane {
        match st.kind {
            StationKind::Pick => &mut self.picks[st.index as usize].lane,
            StationKind::Replenishment => &mut self.repls[st.index as usize].lane,
        }
    }

    fn lane_ref(&self, st: StationRef) -> &Lane {
        match st.kind {
            StationKind::Pick => &self.picks[st.index as usize].lane,
            StationKind::Replenishment => &self.repls[st.index as usize].lane,
        }
    }

    fn apply_activity(&mut self) {
        let pick_on = !self.pauses.pick_paused;
        let repl_on = !self.pauses.repl_paused;
        self.picks.iter_mut().for_each(|s| s.active = pick_on);
        self.repls.iter_mut().for_each(|s| s.active = repl_on);
        let pick: Vec<StationRef> = self.picks.iter().filter(|s| s.active).map(|s| s.r).collect();
        let repl: Vec<StationRef> = self.repls.iter().filter(|s| s.active).map(|s| s.r).collect();
        let ids: Vec<RobotId> = self.bots.iter().map(|b| b.id).collect();
        for (b, s) in self.bots.iter_mut().zip(allocate_robots(&ids, &pick, &repl)) {
            b.station = s;
        }
    }

    fn after_stock_change(&mut self) -> Result<(), SimError> {
        if !self.pauses.update_generation_pauses(self.ledger.utilization(), &self.cfg.orders) {
            return Ok(());
        }
        self.stats.pause_toggles += 1;
        let (pick, repl) = (self.pauses.pick_paused, self.pauses.repl_paused);
        self.record(TraceEvent::Pause { pick, repl, utilization: self.ledger.utilization() });
        self.apply_activity();
        self.refill_backlogs()?;
        for s in 0..self.picks.len() {
            self.fill_slots(s)?;
        }
        self.assign_replenishment();
        self.wake_idle(None)
    }

    fn refill_backlogs(&mut self) -> Result<(), SimError> {
        if !self.pauses.pick_paused {
            while self.backlog.len() < self.cfg.orders.pick_backlog {
                let o = self.gen.generate_pick_order(self.cfg.scenario.order_size, &mut self.orders_rng, self.now)?;
                for l in &o.lines {
                    self.demand[l.sku.index()] += l.required as u64;
                }
                self.backlog.push(o.id);
                self.orders.insert(o.id, o);
            }
        }
        if !self.pauses.repl_paused {
            while self.repl_backlog.len() < self.cfg.orders.repl_backlog {
                let o = self.gen.generate_replenishment_order(self.cfg.scenario.return_share, &mut self.orders_rng);
                self.repl_backlog.push_back(o);
            }
        }
        Ok(())
    }

    /// Idle robots of `only` (or every idle robot) look for work.
    fn wake_idle(&mut self, only: Option<StationRef>) -> Result<(), SimError> {
        for k in 0..self.bots.len() {
            let b = &self.bots[k];
            if b.phase == Phase::Idle && !b.moving && (only.is_none() || b.station == only) {
                self.advance(b.id)?;
            }
        }
        Ok(())
    }

    // ---- order views -----------------------------------------------------

    fn order_lines(&self, id: OrderId, station: bool) -> Vec<LineView> {
        self.orders[&id]
            .lines
            .iter()
            .map(|l| LineView {
                sku: l.sku,
                required: l.required,
                demand: if station { l.unallocated() } else { l.required },
            })
            .collect()
    }

    fn view<'a>(&self, id: OrderId, lines: &'a [LineView]) -> OrderView<'a> {
        let o = &self.orders[&id];
        OrderView { lines, submit: o.submit_time, due: o.due_time, assigned_at: o.station_assign_time }
    }

    fn pod_contents(&self, pod: PodId) -> Vec<(SkuId, u32)> {
        self.ledger.pod(pod).net_contents().collect()
    }

    /// Pods on their way to pick station `s`, soonest first.
    fn inbound(&mut self, s: usize) -> Vec<PodId> {
        let st = self.picks[s].r;
        let mut out: Vec<PodId> = Vec::new();
        if let Some(r) = self.picks[s].serving {
            out.extend(self.bots[r.index()].phase.pod());
        }
        let lane = &self.picks[s].lane;
        for r in lane.robots.iter().chain(lane.waiting.iter()) {
            if let Phase::Lane { pod, .. } = self.bots[r.index()].phase {
                out.push(pod);
            }
        }
        let access = self.layout.station(st).access;
        let mut fetching: Vec<(f64, PodId)> = Vec::new();
        for b in &self.bots {
            if let Phase::Fetch { pod, station } | Phase::Lifting { pod, station } = b.phase {
                if station == st {
                    fetching.push((0.0, pod));
                }
            }
        }
        if !fetching.is_empty() {
            let times = self.planner.times_to(&self.layout, access, true);
            for f in &mut fetching {
                let cell = match self.ledger.pod(f.1).location {
                    PodLocation::Stored(c) => c,
                    PodLocation::Transit => continue,
                };
                f.0 = times.at(cell).unwrap_or(f64::INFINITY);
            }
            fetching.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            out.extend(fetching.into_iter().map(|f| f.1));
        }
        out
    }

    // ---- pick order assignment and allocation -----------------------------

    fn fill_slots(&mut self, s: usize) -> Result<(), SimError> {
        let rule = self.cfg.rules.poa();
        let cap = self.cfg.sim.pick_station_capacity as usize;
        let mut assigned = false;
        loop {
            let st = &self.picks[s];
            if !st.active || self.backlog.is_empty() {
                break;
            }
            let regular = st.orders.len() - st.fast.is_some() as usize;
            let regular_cap = if rule == PoaRule::FastLane { cap.saturating_sub(1).max(1) } else { cap };
            let fast_slot = if regular < regular_cap && st.orders.len() < cap {
                false
            } else if rule == PoaRule::FastLane && st.fast.is_none() && st.orders.len() < cap {
                true
            } else {
                break;
            };
            let inbound = self.inbound(s);
            let pick = {
                let st = &self.picks[s];
                let backlog_lines: Vec<Vec<LineView>> = self.backlog.iter().map(|&o| self.order_lines(o, false)).collect();
                let backlog: Vec<OrderView> =
                    self.backlog.iter().zip(&backlog_lines).map(|(&o, l)| self.view(o, l)).collect();
                let station_lines: Vec<Vec<LineView>> = st.orders.iter().map(|&o| self.order_lines(o, true)).collect();
                let station_orders: Vec<OrderView> =
                    st.orders.iter().zip(&station_lines).map(|(&o, l)| self.view(o, l)).collect();
                let contents: Vec<Vec<(SkuId, u32)>> = inbound.iter().map(|&p| self.pod_contents(p)).collect();
                let pods: Vec<PodView> =
                    inbound.iter().zip(&contents).map(|(&id, c)| PodView { id, contents: c }).collect();
                let ctx = PoaContext {
                    now: self.now,
                    backlog: &backlog,
                    station_orders: &station_orders,
                    inbound: &pods,
                    next_pod: pods.first().copied(),
                    fast_lane_slot: fast_slot,
                };
                poa_select(rule, &ctx, &mut self.rules_rng)
            };
            let Some(k) = pick else { break };
            let id = self.backlog.remove(k);
            let o = self.orders.get_mut(&id).unwrap();
            o.state = OrderState::Assigned;
            o.station_assign_time = Some(self.now);
            let st = &mut self.picks[s];
            st.orders.push(id);
            if fast_slot {
                st.fast = Some(id);
            }
            let r = st.r;
            self.record(TraceEvent::OrderAssigned { station: r, order: id });
            self.refill_backlogs()?;
            for p in inbound {
                self.allocate(s, p, Some(id));
            }
            assigned = true;
        }
        if assigned {
            self.try_start_unit(s)?;
            let r = self.picks[s].r;
            self.wake_idle(Some(r))?;
        }
        Ok(())
    }

    /// Reserves units of `pod` for the open demand of station `s` (or of one
    /// order). Returns the units allocated.
    fn allocate(&mut self, s: usize, pod: PodId, only: Option<OrderId>) -> u32 {
        let mut total = 0;
        let ids: Vec<OrderId> = match only {
            Some(o) => vec![o],
            None => self.picks[s].orders.clone(),
        };
        for id in ids {
            let order = self.orders.get_mut(&id).unwrap();
            for line in order.lines.iter_mut() {
                let want = line.unallocated();
                if want == 0 {
                    continue;
                }
                let n = want.min(self.ledger.pod(pod).available(line.sku));
                if n == 0 {
                    continue;
                }
                let _held = self.ledger.reserve_pick(pod, line.sku, n).expect("availability checked");
                line.allocated += n;
                total += n;
                self.pods[pod.index()].allocs.push(Alloc { order: id, sku: line.sku, units: n });
            }
        }
        total
    }

    // ---- pick station process ---------------------------------------------

    fn try_start_unit(&mut self, s: usize) -> Result<(), SimError> {
        let st = &self.picks[s];
        if st.unit_busy {
            return Ok(());
        }
        let Some(r) = st.serving else { return Ok(()) };
        let pod = self.bots[r.index()].phase.pod().expect("serving robot carries a pod");
        if self.pods[pod.index()].allocs.is_empty() && self.allocate(s, pod, None) == 0 {
            return self.release(r);
        }
        let t = self.cfg.sim.timing;
        let st = &mut self.picks[s];
        let start = st.picker_free.max(self.now);
        st.unit_busy = true;
        st.picker_free = start + t.t_handle;
        let horizon = self.cfg.horizon;
        st.busy += (start + t.t_handle).min(horizon) - start.min(horizon);
        self.schedule(start + t.t_pick, EventKind::PickDone(s as u32));
        Ok(())
    }

    fn pick_done(&mut self, s: usize) -> Result<(), SimError> {
        let r = self.picks[s].serving.expect("pick without a robot");
        let pod = self.bots[r.index()].phase.pod().unwrap();
        let a = {
            let allocs = &mut self.pods[pod.index()].allocs;
            let a = allocs[0];
            if a.units == 1 {
                allocs.remove(0);
            } else {
                allocs[0].units -= 1;
            }
            a
        };
        if self.ledger.pod(pod).units(a.sku) == 0 {
            return Err(SimError::Invariant { time: self.now, what: "picked unit is not on the presented pod" });
        }
        self.ledger.commit_pick(PickReservation { pod, sku: a.sku, units: 1 });
        self.orders.get_mut(&a.order).unwrap().line_mut(a.sku).unwrap().picked += 1;
        self.demand[a.sku.index()] -= 1;
        self.stats.units_picked += 1;
        let st = &mut self.picks[s];
        if st.visit_fresh {
            st.visit_fresh = false;
            self.stats.pick_pod_visits += 1;
        }
        st.unit_busy = false;
        st.handling.push_back((a.order, a.sku));
        let done_at = st.picker_free;
        let station = st.r;
        self.schedule(done_at, EventKind::HandleDone(s as u32));
        self.record(TraceEvent::Pick { station, pod, order: a.order, sku: a.sku });
        self.try_start_unit(s)?;
        self.after_stock_change()
    }

    fn handle_done(&mut self, s: usize) -> Result<(), SimError> {
        let (id, sku) = self.picks[s].handling.pop_front().expect("handled unit");
        let o = self.orders.get_mut(&id).unwrap();
        o.line_mut(sku).unwrap().handled += 1;
        if !o.is_fully_handled() {
            return Ok(());
        }
        let o = self.orders.remove(&id).unwrap();
        self.completed.push(CompletedOrder { submit: o.submit_time, due: o.due_time, completed: self.now });
        self.stats.orders_completed += 1;
        let st = &mut self.picks[s];
        st.orders.retain(|&x| x != id);
        if st.fast == Some(id) {
            st.fast = None;
        }
        let station = st.r;
        self.record(TraceEvent::OrderDone { station, order: id });
        self.fill_slots(s)
    }

    // ---- replenishment ----------------------------------------------------

    /// Pods that may take another order for station `st` (or any station).
    fn rps_candidates(&mut self, st: Option<u32>, slots: u32) -> Vec<RpsCandidate> {
        let access = st.map(|i| self.layout.stations(StationKind::Replenishment)[i as usize].access);
        let mut out = Vec::new();
        for (i, ps) in self.pods.iter().enumerate() {
            let pod = self.ledger.pod(PodId(i as u32));
            if pod.free_slots() < slots {
                continue;
            }
            let ok = match ps.claim {
                None => pod.is_stored(),
                Some(r) => {
                    ps.bound.is_some()
                        && matches!(
                            self.bots[r.index()].phase,
                            Phase::Fetch { station, .. } | Phase::Lifting { station, .. } | Phase::Lane { station, .. }
                                if station.kind == StationKind::Replenishment && Some(station.index) == ps.bound
                        )
                }
            };
            if !ok || (st.is_some() && ps.bound.is_some() && ps.bound != st) {
                continue;
            }
            out.push(RpsCandidate {
                id: pod.id,
                fill: pod.occupied_slots() + pod.reserved_in,
                travel: 0.0,
                offered_demand: pod
                    .items()
                    .iter()
                    .map(|it| ((it.units - it.reserved) as u64).min(self.demand[it.sku.index()]))
                    .sum(),
                class: pod.class,
            });
        }
        if self.cfg.rules.rps() == RpsRule::Nearest {
            if let Some(access) = access {
                let times = self.planner.times_to(&self.layout, access, true);
                for c in &mut out {
                    let ps = &self.pods[c.id.index()];
                    c.travel = match (ps.bound, self.ledger.pod(c.id).location) {
                        (Some(_), _) => 0.0,
                        (None, PodLocation::Stored(cell)) => times.at(cell).unwrap_or(f64::INFINITY),
                        (None, PodLocation::Transit) => f64::INFINITY,
                    };
                }
            }
        }
        out
    }

    fn choose_pod(&mut self, cands: &[RpsCandidate], sku: SkuId, slots: u32) -> Option<PodId> {
        let rule = self.cfg.rules.rps();
        let class = self.sku_class[sku.index()];
        let key = match rule {
            RpsRule::Emptiest => Some(0usize),
            RpsRule::Class => Some(class as usize + 1),
            _ => None,
        };
        if let Some(k) = key {
            if let Some(p) = self.sticky[k.min(3)] {
                if cands.iter().any(|c| c.id == p) && self.ledger.pod(p).free_slots() >= slots {
                    return Some(p);
                }
            }
        }
        let i = rps_select(rule, cands, class, &mut self.rules_rng)?;
        let p = cands[i].id;
        if let Some(k) = key {
            self.sticky[k.min(3)] = Some(p);
        }
        Some(p)
    }

    fn feasible_repl_stations(&self, slots: u32) -> Vec<u32> {
        let cap = self.cfg.sim.repl_capacity();
        self.repls.iter().filter(|s| s.active && s.used + slots <= cap).map(|s| s.r.index).collect()
    }

    /// Assigns replenishment orders strictly in arrival order; a waiting head
    /// blocks everything behind it.
    fn assign_replenishment(&mut self) {
        while let Some(head) = self.repl_backlog.front() {
            let (sku, units) = (head.sku, head.units);
            let slots = units * self.ledger.sku(sku).unit_size;
            let choice = match self.cfg.rules.roa() {
                RoaRule::Random => {
                    let feasible = self.feasible_repl_stations(slots);
                    if feasible.is_empty() {
                        break;
                    }
                    let s = feasible[self.rules_rng.gen_range(0..feasible.len())];
                    let cands = self.rps_candidates(Some(s), slots);
                    self.choose_pod(&cands, sku, slots).map(|p| (s, p))
                }
                RoaRule::PodBatch => {
                    let cands = self.rps_candidates(None, slots);
                    match self.choose_pod(&cands, sku, slots) {
                        None => None,
                        Some(p) => match self.pods[p.index()].bound {
                            Some(b) => {
                                let cap = self.cfg.sim.repl_capacity();
                                let st = &self.repls[b as usize];
                                (st.active && st.used + slots <= cap).then_some((b, p))
                            }
                            None => {
                                let feasible = self.feasible_repl_stations(slots);
                                (!feasible.is_empty())
                                    .then(|| (feasible[self.rules_rng.gen_range(0..feasible.len())], p))
                            }
                        },
                    }
                }
            };
            let Some((s, pod)) = choice else { break };
            let order = self.repl_backlog.pop_front().unwrap();
            let res = self.ledger.reserve_replenishment_space(pod, sku, units).expect("free space checked");
            self.pods[pod.index()].bound = Some(s);
            let st = &mut self.repls[s as usize];
            st.used += res.slots;
            let station = st.r;
            let id = order.id;
            st.pending.push(Insertion { order, res });
            self.record(TraceEvent::ReplAssigned { station, pod, order: id });
            if !self.pauses.repl_paused {
                let o = self.gen.generate_replenishment_order(self.cfg.scenario.return_share, &mut self.orders_rng);
                self.repl_backlog.push_back(o);
            }
            let _ = self.wake_idle(Some(station));
        }
    }

    fn start_put(&mut self, s: usize) -> Result<(), SimError> {
        let st = &mut self.repls[s];
        if st.putting.is_some() {
            return Ok(());
        }
        let Some(r) = st.serving else { return Ok(()) };
        let pod = self.bots[r.index()].phase.pod().unwrap();
        match st.pending.iter().position(|i| i.res.pod == pod) {
            Some(k) => {
                st.putting = Some(st.pending.remove(k));
                let t = self.now + self.cfg.sim.timing.t_put;
                self.schedule(t, EventKind::PutDone(s as u32));
                Ok(())
            }
            None => {
                self.pods[pod.index()].bound = None;
                self.release(r)
            }
        }
    }

    fn put_done(&mut self, s: usize) -> Result<(), SimError> {
        let ins = self.repls[s].putting.take().expect("put in progress");
        self.repls[s].used -= ins.res.slots;
        self.stats.units_put += ins.res.units as u64;
        self.stats.repl_orders_stored += 1;
        let station = self.repls[s].r;
        self.record(TraceEvent::Put { station, pod: ins.res.pod, order: ins.order.id, units: ins.res.units });
        self.ledger.commit_put(ins.res);
        self.start_put(s)?;
        self.assign_replenishment();
        self.after_stock_change()
    }

    // ---- robots -----------------------------------------------------------

    fn times_from(&mut self, source: CellId, carrying: bool) -> &PathTimes {
        let key = (source, carrying);
        if !self.from_cache.contains_key(&key) {
            if self.from_order.len() >= self.cfg.planner.cache_size.max(1) {
                if let Some(old) = self.from_order.pop_front() {
                    self.from_cache.remove(&old);
                }
            }
            self.from_cache.insert(key, self.layout.times_from(source, Search { carrying }));
            self.from_order.push_back(key);
        }
        &self.from_cache[&key]
    }

    /// Pod free for `r` to pick up: stored, unclaimed, nobody else parked on it.
    fn pod_free_for(&self, pod: PodId, r: RobotId) -> Option<CellId> {
        if self.pods[pod.index()].claim.is_some() {
            return None;
        }
        match self.ledger.pod(pod).location {
            PodLocation::Stored(c) => match self.cell_robot[c.index()] {
                Some(o) if o != r => None,
                _ => Some(c),
            },
            PodLocation::Transit => None,
        }
    }

    /// Starts whatever the robot's phase calls for next.
    fn advance(&mut self, r: RobotId) -> Result<(), SimError> {
        let b = &self.bots[r.index()];
        if b.moving {
            return Ok(());
        }
        match b.phase {
            Phase::Idle => self.next_task(r),
            Phase::Dwell { cell } => {
                if b.cell == cell {
                    self.bots[r.index()].phase = Phase::Idle;
                    self.next_task(r)
                } else if !self.parkable(cell, r) {
                    // Taken by someone who planned first; pick another spot.
                    self.park(r)
                } else {
                    self.drive(r, cell, false)
                }
            }
            Phase::Fetch { pod, .. } => {
                let PodLocation::Stored(cell) = self.ledger.pod(pod).location else { unreachable!() };
                if b.cell == cell {
                    self.start_lift(r)
                } else {
                    self.drive(r, cell, false)
                }
            }
            Phase::Lane { station, at, .. } => {
                let Some(k) = self.lane(station).robots.iter().position(|&x| x == r) else { return Ok(()) };
                if at == Some(k) {
                    return if k == 0 { self.present(r) } else { Ok(()) };
                }
                // The lane is single file: enter only once everyone ahead is in.
                let lane = &self.lane_ref(station).robots;
                let blocked = at.is_none()
                    && lane[..k].iter().any(|q| matches!(self.bots[q.index()].phase, Phase::Lane { at: None, .. }));
                if blocked {
                    return Ok(());
                }
                let cell = self.layout.station(station).slot_cell(k);
                self.bots[r.index()].heading_for = k;
                self.drive(r, cell, true)
            }
            Phase::Store { cell, .. } => {
                if b.cell == cell {
                    self.start_set_down(r)
                } else {
                    self.drive(r, cell, true)
                }
            }
            Phase::Serving { .. } if b.release_pending => self.release(r),
            Phase::Lifting { .. } | Phase::Serving { .. } | Phase::SettingDown { .. } => Ok(()),
        }
    }

    fn drive(&mut self, r: RobotId, goal: CellId, carrying: bool) -> Result<(), SimError> {
        let b = &self.bots[r.index()];
        let (from, heading) = (b.cell, b.heading);
        let req = PlanRequest { robot: r, start: from, heading, t0: self.now, goal, carrying };
        self.stats.plans += 1;
        match self.planner.plan(&self.layout, &mut self.table, req) {
            Ok(path) => {
                if self.layout.cell(from).is_storage() && self.cell_robot[from.index()] == Some(r) {
                    self.cell_robot[from.index()] = None;
                }
                if self.layout.cell(goal).is_storage() {
                    self.cell_robot[goal.index()] = Some(r);
                }
                let b = &mut self.bots[r.index()];
                b.cell = goal;
                b.heading = path.heading;
                b.moving = true;
                b.failures = 0;
                b.token += 1;
                b.pending_distance = path.distance;
                let leaving = if matches!(b.phase, Phase::Store { .. }) { b.in_lane.take() } else { None };
                self.record(TraceEvent::Plan { robot: r, from, to: goal, arrive: path.end });
                self.schedule(path.end, EventKind::LegDone(r));
                if let Some(st) = leaving {
                    self.depart(st, r)?;
                }
                Ok(())
            }
            Err(cause) => {
                self.stats.plan_failures += 1;
                let b = &mut self.bots[r.index()];
                b.failures += 1;
                if b.failures > self.cfg.sim.retry_budget {
                    return Err(SimError::Livelock { robot: r, from, goal, attempts: b.failures, time: self.now, cause });
                }
                b.token += 1;
                let token = b.token;
                let delay = match cause {
                    PlanError::Unreachable { .. } => {
                        return Err(SimError::Livelock { robot: r, from, goal, attempts: b.failures, time: self.now, cause })
                    }
                    _ => self.cfg.sim.retry_delay,
                };
                self.schedule(self.now + delay, EventKind::Replan(r, token));
                Ok(())
            }
        }
    }

    fn start_lift(&mut self, r: RobotId) -> Result<(), SimError> {
        let b = &mut self.bots[r.index()];
        let Phase::Fetch { pod, station } = b.phase else { unreachable!() };
        b.phase = Phase::Lifting { pod, station };
        b.moving = true;
        let t = self.now + self.cfg.kinematics.lift_set_time;
        self.schedule(t, EventKind::LegDone(r));
        Ok(())
    }

    fn start_set_down(&mut self, r: RobotId) -> Result<(), SimError> {
        let b = &mut self.bots[r.index()];
        let Phase::Store { pod, cell } = b.phase else { unreachable!() };
        b.phase = Phase::SettingDown { pod, cell };
        b.moving = true;
        let t = self.now + self.cfg.kinematics.lift_set_time;
        self.schedule(t, EventKind::LegDone(r));
        Ok(())
    }

    fn leg_done(&mut self, r: RobotId) -> Result<(), SimError> {
        let b = &mut self.bots[r.index()];
        b.moving = false;
        b.distance += core::mem::take(&mut b.pending_distance);
        match b.phase {
            Phase::Lifting { pod, station } => {
                let cell = b.cell;
                b.phase = Phase::Lane { pod, station, at: None };
                self.ledger.pod_mut(pod).location = PodLocation::Transit;
                self.cell_pod[cell.index()] = None;
                self.record(TraceEvent::Lift { robot: r, pod, cell });
                let cap = self.layout.station(station).lane_len();
                let lane = self.lane(station);
                if lane.robots.len() < cap && lane.waiting.is_empty() {
                    lane.robots.push(r);
                } else {
                    lane.waiting.push_back(r);
                }
                self.advance(r)
            }
            Phase::Lane { pod, station, .. } => {
                let at = Some(b.heading_for);
                b.phase = Phase::Lane { pod, station, at };
                self.advance(r)?;
                self.nudge_lane(station)
            }
            Phase::SettingDown { pod, cell } => {
                b.phase = Phase::Idle;
                self.ledger.pod_mut(pod).location = PodLocation::Stored(cell);
                self.pods[pod.index()].claim = None;
                self.record(TraceEvent::SetDown { robot: r, pod, cell });
                self.advance(r)?;
                self.wake_idle(None)?;
                if self.pods[pod.index()].bound.is_some() {
                    self.assign_replenishment();
                }
                Ok(())
            }
            Phase::Idle | Phase::Dwell { .. } | Phase::Fetch { .. } | Phase::Store { .. } => self.advance(r),
            Phase::Serving { .. } => Ok(()),
        }
    }

    /// Robot reached the access point with its pod.
    fn present(&mut self, r: RobotId) -> Result<(), SimError> {
        let b = &mut self.bots[r.index()];
        let Phase::Lane { pod, station, .. } = b.phase else { unreachable!() };
        b.phase = Phase::Serving { pod, station };
        self.record(TraceEvent::AtStation { robot: r, pod, station });
        for s in self.sticky.iter_mut() {
            if *s == Some(pod) {
                *s = None;
            }
        }
        let s = station.index as usize;
        match station.kind {
            StationKind::Pick => {
                let st = &mut self.picks[s];
                st.serving = Some(r);
                st.visit_fresh = true;
                self.allocate(s, pod, None);
                self.fill_slots(s)?;
                self.try_start_unit(s)
            }
            StationKind::Replenishment => {
                self.stats.repl_pod_visits += 1;
                self.repls[s].serving = Some(r);
                self.start_put(s)
            }
        }
    }

    /// Pod at the access point is done: choose where to store it and leave.
    fn release(&mut self, r: RobotId) -> Result<(), SimError> {
        let b = &self.bots[r.index()];
        let Phase::Serving { pod, station } = b.phase else { unreachable!() };
        let from = b.cell;
        let Some(cell) = self.storage_location(pod, from) else {
            let b = &mut self.bots[r.index()];
            b.release_pending = true;
            b.token += 1;
            let token = b.token;
            self.schedule(self.now + self.cfg.sim.retry_delay, EventKind::Replan(r, token));
            return Ok(());
        };
        self.cell_pod[cell.index()] = Some(pod);
        match station.kind {
            StationKind::Pick => self.picks[station.index as usize].serving = None,
            StationKind::Replenishment => self.repls[station.index as usize].serving = None,
        }
        let b = &mut self.bots[r.index()];
        b.release_pending = false;
        b.phase = Phase::Store { pod, cell };
        b.in_lane = Some(station);
        self.advance(r)
    }

    fn storage_location(&mut self, pod: PodId, from: CellId) -> Option<CellId> {
        let rule = self.cfg.rules.psa();
        if rule == PsaRule::Fixed {
            let home = self.pods[pod.index()].home.expect("fixed pods have a home");
            let free = self.cell_pod[home.index()].is_none() && self.cell_robot[home.index()].is_none();
            return free.then_some(home);
        }
        let cells: Vec<CellId> = self
            .layout
            .storage_locations()
            .iter()
            .copied()
            .filter(|c| self.cell_pod[c.index()].is_none() && self.cell_robot[c.index()].is_none())
            .collect();
        if cells.is_empty() {
            return None;
        }
        let travel: Vec<f64> = if matches!(rule, PsaRule::Nearest | PsaRule::Class) {
            let t = self.times_from(from, true);
            cells.iter().map(|&c| t.at(c).unwrap_or(f64::INFINITY)).collect()
        } else {
            vec![0.0; cells.len()]
        };
        let cands: Vec<PsaCandidate> = cells
            .iter()
            .zip(&travel)
            .map(|(&c, &t)| PsaCandidate {
                cell: c,
                travel: t,
                station_time: self.station_time[c.index()],
                class: self.location_class[c.index()],
            })
            .collect();
        let class = self.ledger.pod(pod).class;
        let choice = psa_select(rule, &cands, None, class, &mut self.rules_rng)?;
        if choice.fallback {
            self.stats.class_fallbacks += 1;
        }
        Some(cands[choice.index].cell)
    }

    /// `r` has left the access point of `st`: the queue moves up.
    fn depart(&mut self, st: StationRef, r: RobotId) -> Result<(), SimError> {
        let cap = self.layout.station(st).lane_len();
        let lane = self.lane(st);
        lane.robots.retain(|&x| x != r);
        while lane.robots.len() < cap {
            match lane.waiting.pop_front() {
                Some(w) => lane.robots.push(w),
                None => break,
            }
        }
        self.nudge_lane(st)
    }

    fn nudge_lane(&mut self, st: StationRef) -> Result<(), SimError> {
        let queue = self.lane(st).robots.clone();
        for q in queue {
            self.advance(q)?;
        }
        Ok(())
    }

    fn next_task(&mut self, r: RobotId) -> Result<(), SimError> {
        let found = match self.bots[r.index()].station {
            Some(st) if st.kind == StationKind::Pick => self.pick_task(r, st.index as usize)?,
            Some(st) => self.insertion_task(r, st.index as usize),
            None => false,
        };
        if found {
            return self.advance(r);
        }
        self.park(r)
    }

    fn pick_task(&mut self, r: RobotId, s: usize) -> Result<bool, SimError> {
        let st = &self.picks[s];
        if !st.active {
            return Ok(false);
        }
        let mut need: Vec<(SkuId, u32)> = Vec::new();
        for id in &st.orders {
            for l in &self.orders[id].lines {
                if l.unallocated() > 0 {
                    need.push((l.sku, l.unallocated()));
                }
            }
        }
        if need.is_empty() {
            return Ok(false);
        }
        need.sort_unstable();
        let useful = |sku: SkuId| need.binary_search_by_key(&sku, |e| e.0).is_ok();
        let mut ids: Vec<PodId> = Vec::new();
        let mut contents: Vec<Vec<(SkuId, u32)>> = Vec::new();
        for p in &self.ledger.pods {
            if self.pod_free_for(p.id, r).is_none() {
                continue;
            }
            if p.net_contents().any(|(sku, _)| useful(sku)) {
                ids.push(p.id);
                contents.push(p.net_contents().collect());
            }
        }
        if ids.is_empty() {
            return Ok(false);
        }
        let rule = self.cfg.rules.pps();
        let access = self.layout.station(st.r).access;
        let travel: Vec<f64> = if rule == crate::rules::PpsRule::Nearest {
            let t = self.planner.times_to(&self.layout, access, true);
            ids.iter()
                .map(|&p| match self.ledger.pod(p).location {
                    PodLocation::Stored(c) => t.at(c).unwrap_or(f64::INFINITY),
                    PodLocation::Transit => f64::INFINITY,
                })
                .collect()
        } else {
            vec![0.0; ids.len()]
        };
        let st = &self.picks[s];
        let station_lines: Vec<Vec<LineView>> = st.orders.iter().map(|&o| self.order_lines(o, true)).collect();
        let station_orders: Vec<OrderView> =
            st.orders.iter().zip(&station_lines).map(|(&o, l)| self.view(o, l)).collect();
        let (backlog_lines, backlog_ids): (Vec<Vec<LineView>>, &[OrderId]) = if rule == crate::rules::PpsRule::Demand {
            (self.backlog.iter().map(|&o| self.order_lines(o, false)).collect(), &self.backlog)
        } else {
            (Vec::new(), &[])
        };
        let backlog: Vec<OrderView> = backlog_ids.iter().zip(&backlog_lines).map(|(&o, l)| self.view(o, l)).collect();
        let pods: Vec<PodView> = ids.iter().zip(&contents).map(|(&id, c)| PodView { id, contents: c }).collect();
        let ctx = PpsContext { now: self.now, candidates: &pods, travel: &travel, station_orders: &station_orders, backlog: &backlog };
        let Some(k) = pps_select(rule, &ctx, &mut self.rules_rng) else { return Ok(false) };
        let pod = ids[k];
        self.pods[pod.index()].claim = Some(r);
        let station = self.picks[s].r;
        self.bots[r.index()].phase = Phase::Fetch { pod, station };
        let got = self.allocate(s, pod, None);
        debug_assert!(got > 0, "selected pod offers nothing");
        self.fill_slots(s)?;
        Ok(true)
    }

    fn insertion_task(&mut self, r: RobotId, s: usize) -> bool {
        let st = &self.repls[s];
        if !st.active {
            return false;
        }
        let mut seen: Vec<PodId> = Vec::new();
        let mut chosen = None;
        for ins in &st.pending {
            let p = ins.res.pod;
            if seen.contains(&p) {
                continue;
            }
            seen.push(p);
            if self.pod_free_for(p, r).is_some() {
                chosen = Some(p);
                break;
            }
        }
        let Some(pod) = chosen else { return false };
        self.pods[pod.index()].claim = Some(r);
        self.bots[r.index()].phase = Phase::Fetch { pod, station: st.r };
        true
    }

    /// Nothing to do: stay on a free storage location or go to a dwell point.
    fn park(&mut self, r: RobotId) -> Result<(), SimError> {
        let cell = self.bots[r.index()].cell;
        let c = self.layout.cell(cell);
        let parked_ok = c.is_storage() && self.cell_pod[cell.index()].is_none() && self.home_of[cell.index()].is_none();
        if parked_ok && (c.dwell || self.free_dwell_points(r).is_empty()) {
            self.bots[r.index()].phase = Phase::Idle;
            return Ok(());
        }
        let mut cands = self.free_dwell_points(r);
        if cands.is_empty() {
            if parked_ok {
                self.bots[r.index()].phase = Phase::Idle;
                return Ok(());
            }
            cands = self
                .layout
                .storage_locations()
                .iter()
                .copied()
                .filter(|&c| self.parkable(c, r))
                .collect();
        }
        if cands.is_empty() {
            self.bots[r.index()].phase = Phase::Idle;
            return Ok(());
        }
        let times = self.times_from(cell, false);
        let best = cands
            .iter()
            .copied()
            .min_by(|a, b| {
                let ta = times.at(*a).unwrap_or(f64::INFINITY);
                let tb = times.at(*b).unwrap_or(f64::INFINITY);
                ta.total_cmp(&tb).then(a.cmp(b))
            })
            .unwrap();
        self.bots[r.index()].phase = Phase::Dwell { cell: best };
        self.advance(r)
    }

    fn parkable(&self, c: CellId, r: RobotId) -> bool {
        self.cell_pod[c.index()].is_none()
            && self.home_of[c.index()].is_none()
            && self.cell_robot[c.index()].map_or(true, |x| x == r)
    }

    fn free_dwell_points(&self, r: RobotId) -> Vec<CellId> {
        self.layout.dwell_points().iter().copied().filter(|&c| self.parkable(c, r)).collect()
    }
}
