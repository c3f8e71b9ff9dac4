//! The epoch-driven simulation loop.
//!
//! Each epoch processes, in this order and by ascending user id within each
//! phase:
//!
//! 1. session ends whose length has elapsed,
//! 2. one mobility step per user (epoch 0 places users instead),
//! 3. new-session arrivals for idle users: RAT selection, then admission,
//! 4. handover evaluation for every session admitted in an earlier epoch.
//!
//! Per-epoch measurements (hotspot occupancy, sessions per RAT) are taken
//! after phase 4. Every state change is written to the event log, and the
//! online KPI counters consume the same charges in the same order as
//! [`collect_kpis`](crate::kpi::collect_kpis) does, so both agree exactly.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::fuzzy::{score_network, FuzzyError, Priority};
use crate::jrrm::{
    admit, evaluate_handover, execute_handover, probe_handover, select_rat, AdmissionResult, CellIndex,
    HandoverAction, HandoverOutcome, HotspotCells, HysteresisConfig, JrrmError, Occupancy, PredictionSemantics,
    ServiceClass, UserContext,
};
use crate::kpi::{rat_slot, EventKind, EventLog, EventRecord, KpiAccumulator, KpiReport, Outcome};
use crate::mobility::{
    predict_location, stationary_occupancy, HotspotIndex, MobilityClass, MobilityError, Region, UserState,
};
use crate::rng::{self, Purpose};
use crate::scenario::{validate_scenario, EvaluationMode, RatKind, Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Jrrm(#[from] JrrmError),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error("sweep value {value}: {source}")]
    Sweep {
        value: f64,
        #[source]
        source: Box<SimError>,
    },
    #[error("cannot build thread pool: {0}")]
    ThreadPool(String),
}

/// Result of one complete run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: KpiReport,
    pub log: EventLog,
}

struct CellInfo {
    id: String,
    site: usize,
    rat: RatKind,
}

/// Scenario resolved into index form, plus the static score table.
struct Topology {
    cells: Vec<CellInfo>,
    hotspot_ids: Vec<String>,
    hotspots: Vec<HotspotCells>,
    /// `scores[cell][priority]`: cell criteria never change, so a session's
    /// score on a cell depends only on its priority.
    scores: Vec<[f64; 3]>,
}

impl Topology {
    fn compile(s: &Scenario) -> Result<Topology, SimError> {
        let mut cells = Vec::new();
        let mut scores = Vec::new();
        for (site_idx, site) in s.sites.iter().enumerate() {
            for cell in &site.cells {
                let mut row = [0.0; 3];
                for p in Priority::ALL {
                    row[p.index()] = score_network(&cell.criteria.with_priority(p), cell.rat, &s.fuzzy)?;
                }
                scores.push(row);
                cells.push(CellInfo { id: cell.id.clone(), site: site_idx, rat: cell.rat });
            }
        }
        let index_of = |id: &str| {
            cells
                .iter()
                .position(|c| c.id == id)
                .map(|i| CellIndex(i as u32))
                .ok_or_else(|| ScenarioError::Invalid(validate_scenario(s)))
        };
        let hotspots = s
            .hotspots
            .iter()
            .map(|h| Ok(HotspotCells { wlan: index_of(&h.wlan_cell)?, overlay: index_of(&h.overlay_cell)? }))
            .collect::<Result<Vec<_>, ScenarioError>>()?;
        Ok(Topology {
            cells,
            hotspot_ids: s.hotspots.iter().map(|h| h.id.clone()).collect(),
            hotspots,
            scores,
        })
    }

    fn score(&self, cell: CellIndex, p: Priority) -> f64 {
        self.scores[cell.0 as usize][p.index()]
    }

    fn cell(&self, c: CellIndex) -> &CellInfo {
        &self.cells[c.0 as usize]
    }
}

/// What a log row's `from_cell` / `to_cell` column names.
#[derive(Clone, Copy)]
enum Place {
    Nowhere,
    Cell(CellIndex),
    Hotspot(HotspotIndex),
}

impl From<Region> for Place {
    fn from(r: Region) -> Place {
        match r {
            Region::InsideHotspot(h) => Place::Hotspot(h),
            Region::Outside => Place::Nowhere,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Session {
    id: u64,
    cell: CellIndex,
    priority: Priority,
    service: ServiceClass,
    start_epoch: u64,
    end_epoch: u64,
    /// Epoch the session arrived on its current cell.
    since_epoch: u64,
}

/// A running simulation that can be advanced one epoch at a time.
///
/// ```
/// use hetnetsim::{Scenario, Simulation};
///
/// let mut s = Scenario::cluster5x15();
/// s.duration_epochs = 3;
/// let mut sim = Simulation::new(&s).unwrap();
/// while sim.step_epoch().unwrap() {}
/// assert_eq!(sim.epoch(), 3);
/// let out = sim.finish();
/// assert_eq!(out.report.seed, s.seed);
/// ```
pub struct Simulation {
    scenario: Scenario,
    topo: Topology,
    hysteresis: HysteresisConfig,
    semantics: PredictionSemantics,
    horizon: u32,
    users: Vec<UserState>,
    sessions: Vec<Option<Session>>,
    mobility_rngs: Vec<ChaCha8Rng>,
    workload_rngs: Vec<ChaCha8Rng>,
    occupancy: Occupancy,
    epoch: u64,
    next_session: u64,
    sequence: u64,
    record_log: bool,
    log: EventLog,
    kpis: KpiAccumulator,
}

impl Simulation {
    /// Validates `scenario` and places the population.
    pub fn new(scenario: &Scenario) -> Result<Simulation, SimError> {
        let violations = validate_scenario(scenario);
        if !violations.is_empty() {
            return Err(ScenarioError::Invalid(violations).into());
        }
        let topo = Topology::compile(scenario)?;
        let n = scenario.population.num_users;
        let mut users = Vec::with_capacity(n as usize);
        for u in 0..n {
            let mut rng = rng::stream(scenario.seed, Purpose::Population, u as u64);
            let class = if rng.gen::<f64>() < scenario.population.p_vehicular {
                MobilityClass::Vehicular
            } else {
                MobilityClass::NonVehicular
            };
            let p_inside = match stationary_occupancy(&scenario.mobility, class) {
                Ok(p) => p,
                // Nobody ever moves: start everyone outside.
                Err(MobilityError::Degenerate) => 0.0,
                Err(e) => return Err(e.into()),
            };
            let inside = rng.gen::<f64>() < p_inside;
            let home = HotspotIndex(u % topo.hotspots.len() as u32);
            users.push(UserState::new(u, class, home, inside));
        }
        let capacity = scenario.cells().map(|(_, c)| c.capacity_sessions).collect();
        Ok(Simulation {
            hysteresis: scenario.handover.hysteresis(),
            semantics: PredictionSemantics::from_table2_flag(scenario.handover.table2_semantics),
            horizon: scenario.workload.mean_session_epochs.ceil().min(u32::MAX as f64) as u32,
            sessions: vec![None; n as usize],
            mobility_rngs: (0..n).map(|u| rng::stream(scenario.seed, Purpose::Mobility, u as u64)).collect(),
            workload_rngs: (0..n).map(|u| rng::stream(scenario.seed, Purpose::Workload, u as u64)).collect(),
            occupancy: Occupancy::new(capacity),
            epoch: 0,
            next_session: 0,
            sequence: 0,
            record_log: true,
            log: EventLog::default(),
            kpis: KpiAccumulator::new(scenario),
            users,
            topo,
            scenario: scenario.clone(),
        })
    }

    /// Skips building the event log; KPIs are still computed online.
    pub fn without_log(mut self) -> Simulation {
        self.record_log = false;
        self
    }

    /// Epochs completed so far.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn is_finished(&self) -> bool {
        self.epoch >= self.scenario.duration_epochs
    }

    pub fn occupancy(&self) -> &Occupancy {
        &self.occupancy
    }

    pub fn active_sessions(&self) -> usize {
        self.sessions.iter().filter(|s| s.is_some()).count()
    }

    pub fn users(&self) -> &[UserState] {
        &self.users
    }

    /// Runs one epoch; returns `false` once the run is complete.
    pub fn step_epoch(&mut self) -> Result<bool, SimError> {
        if self.is_finished() {
            return Ok(false);
        }
        self.end_sessions()?;
        self.move_users();
        self.arrivals()?;
        self.handovers()?;
        let inside = self.users.iter().filter(|u| u.region.is_inside()).count() as u64;
        let mut per_rat = [0u64; 3];
        for (i, &n) in self.occupancy.counts().iter().enumerate() {
            per_rat[rat_slot(self.topo.cells[i].rat)] += n as u64;
        }
        self.kpis.close_epoch(inside, per_rat);
        self.epoch += 1;
        Ok(!self.is_finished())
    }

    /// Runs any remaining epochs and returns the report and log.
    pub fn finish(mut self) -> RunOutput {
        while !self.is_finished() {
            self.step_epoch().expect("a validated scenario cannot fail mid-run");
        }
        RunOutput { report: self.kpis.finish(&self.scenario), log: self.log }
    }

    #[allow(clippy::too_many_arguments)]
    fn emit(&mut self, kind: EventKind, user: u32, session: Option<u64>, from: Place, to: Place, outcome: Outcome, cost: f64) {
        if self.record_log {
            let name = |p: Place| match p {
                Place::Nowhere => String::new(),
                Place::Cell(c) => self.topo.cell(c).id.clone(),
                Place::Hotspot(h) => self.topo.hotspot_ids[h.0 as usize].clone(),
            };
            let record = EventRecord {
                epoch: self.epoch,
                sequence: self.sequence,
                kind,
                user_id: user,
                session_id: session,
                from_cell: name(from),
                to_cell: name(to),
                outcome,
                signalling_cost: cost,
            };
            self.log.records.push(record);
        }
        self.sequence += 1;
    }

    fn charge_cell(&mut self, cell: CellIndex, cost: f64) {
        self.kpis.charge(self.topo.cell(cell).site, cost);
    }

    fn end_sessions(&mut self) -> Result<(), SimError> {
        for u in 0..self.users.len() {
            let Some(s) = self.sessions[u] else { continue };
            if s.end_epoch > self.epoch {
                continue;
            }
            self.occupancy.release(s.cell)?;
            self.sessions[u] = None;
            self.users[u].session = None;
            self.emit(EventKind::SessionEnd, u as u32, Some(s.id), Place::Cell(s.cell), Place::Nowhere, Outcome::Completed, 0.0);
            self.charge_cell(s.cell, 0.0);
        }
        Ok(())
    }

    fn move_users(&mut self) {
        for u in 0..self.users.len() {
            let before = self.users[u].region;
            if self.epoch > 0 {
                let draw = self.mobility_rngs[u].gen::<f64>();
                self.users[u].step(&self.scenario.mobility, draw);
            }
            let after = self.users[u].region;
            let outcome = match (self.epoch, before.is_inside(), after.is_inside()) {
                (0, _, true) => Outcome::Placed,
                (0, _, false) => continue,
                (_, false, true) => Outcome::Entered,
                (_, true, false) => Outcome::Exited,
                _ => continue,
            };
            let place = |r: Region| match r {
                Region::InsideHotspot(h) if outcome != Outcome::Placed => Place::Hotspot(h),
                _ => Place::Nowhere,
            };
            let (from, to) = (place(before), Place::from(after));
            let session = self.sessions[u].map(|s| s.id);
            self.emit(EventKind::MobilityTick, u as u32, session, from, to, outcome, 0.0);
        }
    }

    fn context(&self, u: usize, service: ServiceClass, priority: Priority) -> Result<UserContext, SimError> {
        let user = &self.users[u];
        let inside = user.region.is_inside();
        let prediction = if inside && user.mobility_class == MobilityClass::NonVehicular && service == ServiceClass::RealTime {
            Some(predict_location(user, self.horizon, &self.scenario.mobility)?)
        } else {
            None
        };
        Ok(UserContext { inside_hotspot: inside, mobility_class: user.mobility_class, service_class: service, priority, prediction })
    }

    fn arrivals(&mut self) -> Result<(), SimError> {
        let w = &self.scenario.workload;
        let p_arrival = 1.0 - (-w.arrival_rate_per_user_per_epoch).exp();
        let q = 1.0 / w.mean_session_epochs;
        let (p_realtime, mix) = (w.p_realtime, w.priority_mix);
        let cost = self.scenario.signalling.cost_admit;
        for u in 0..self.users.len() {
            // Fixed four draws per user-epoch keep demand identical across
            // runs that differ only in handover policy.
            let rng = &mut self.workload_rngs[u];
            let draws: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
            if self.sessions[u].is_some() || draws[0] >= p_arrival {
                continue;
            }
            let service = if draws[1] < p_realtime { ServiceClass::RealTime } else { ServiceClass::NonRealTime };
            let priority = mix.pick(draws[2]);
            let length = geometric_length(q, draws[3]);
            let ctx = self.context(u, service, priority)?;
            let decision = select_rat(&ctx, self.semantics)?;
            let cells = self.topo.hotspots[self.users[u].home.0 as usize];
            let id = self.next_session;
            self.next_session += 1;
            let (cell, outcome) = match admit(&decision, &cells, &mut self.occupancy)? {
                AdmissionResult::Admitted(c) => (Some(c), Outcome::Admitted(decision.rule)),
                AdmissionResult::FallbackAdmitted(c) => (Some(c), Outcome::Fallback),
                AdmissionResult::Blocked => (None, Outcome::Blocked(decision.rule)),
            };
            // A blocked request is charged to the last cell tried, which is
            // always the overlay.
            let charged = cell.unwrap_or(cells.overlay);
            self.emit(EventKind::SessionArrival, u as u32, Some(id), Place::Nowhere, Place::Cell(charged), outcome, cost);
            self.kpis.request(cell.is_none());
            self.charge_cell(charged, cost);
            if let Some(cell) = cell {
                let s = Session {
                    id,
                    cell,
                    priority,
                    service,
                    start_epoch: self.epoch,
                    end_epoch: self.epoch.saturating_add(length),
                    since_epoch: self.epoch,
                };
                self.sessions[u] = Some(s);
                self.users[u].session = Some(id);
            }
        }
        Ok(())
    }

    /// Cells that serve user `u` where it currently is.
    fn covering(&self, u: usize) -> (Option<CellIndex>, CellIndex) {
        let user = &self.users[u];
        match user.region {
            Region::InsideHotspot(h) => {
                let cells = self.topo.hotspots[h.0 as usize];
                (Some(cells.wlan), cells.overlay)
            }
            Region::Outside => (None, self.topo.hotspots[user.home.0 as usize].overlay),
        }
    }

    fn handovers(&mut self) -> Result<(), SimError> {
        let replay = self.scenario.handover.mode == EvaluationMode::ReplayedTrace;
        for u in 0..self.users.len() {
            let Some(mut s) = self.sessions[u] else { continue };
            if s.start_epoch >= self.epoch {
                continue;
            }
            let (wlan, overlay) = self.covering(u);
            let on_wlan = self.topo.cell(s.cell).rat == RatKind::Wlan80211;
            if on_wlan && wlan != Some(s.cell) {
                self.forced_handover(u, s, overlay)?;
                continue;
            }

            // Discretionary: best other covering cell, WLAN only where the
            // selection policy would itself pick WLAN for this session now.
            let dwell = (self.epoch - s.since_epoch).min(u32::MAX as u64) as u32;
            let current = self.topo.score(s.cell, s.priority);
            let scored = |c: CellIndex| (c, self.topo.score(c, s.priority));
            let overlay_candidate = (overlay != s.cell).then(|| scored(overlay));
            let mut wlan_candidate = wlan.filter(|&w| w != s.cell).map(scored);
            // The policy check (which consults the location predictor) can
            // only change the result when the WLAN would otherwise be the
            // attempted target, so it is skipped in every other case.
            if let Some(w) = wlan_candidate {
                let wins = overlay_candidate.is_none_or(|o| beats(w, o));
                if wins && matches!(evaluate_handover(current, w, &self.hysteresis, dwell), HandoverAction::Attempt { .. }) {
                    let ctx = self.context(u, s.service, s.priority)?;
                    if select_rat(&ctx, self.semantics)?.target != RatKind::Wlan80211 {
                        wlan_candidate = None;
                    }
                }
            }
            let best = match (wlan_candidate, overlay_candidate) {
                (Some(w), Some(o)) => Some(if beats(w, o) { w } else { o }),
                (w, o) => w.or(o),
            };
            let Some(best) = best else { continue };
            let HandoverAction::Attempt { target, .. } = evaluate_handover(current, best, &self.hysteresis, dwell) else {
                continue;
            };
            let sig = &self.scenario.signalling;
            let (outcome, label) = if replay {
                let o = probe_handover(target, &self.occupancy, sig)?;
                (o, if o.is_success() { Outcome::ReplaySuccess } else { Outcome::ReplayFailure })
            } else {
                let o = execute_handover(s.cell, target, &mut self.occupancy, sig)?;
                (o, if o.is_success() { Outcome::Success } else { Outcome::Failure })
            };
            self.log_handover(u, &s, target, label, &outcome);
            if label == Outcome::Success {
                s.cell = target;
                s.since_epoch = self.epoch;
                self.sessions[u] = Some(s);
            }
        }
        Ok(())
    }

    /// Coverage lost: move to the overlay regardless of hysteresis, or drop.
    fn forced_handover(&mut self, u: usize, mut s: Session, overlay: CellIndex) -> Result<(), SimError> {
        let sig = &self.scenario.signalling;
        let outcome = execute_handover(s.cell, overlay, &mut self.occupancy, sig)?;
        if outcome.is_success() {
            self.log_handover(u, &s, overlay, Outcome::ForcedSuccess, &outcome);
            s.cell = overlay;
            s.since_epoch = self.epoch;
            self.sessions[u] = Some(s);
        } else {
            self.log_handover(u, &s, overlay, Outcome::ForcedFailure, &outcome);
            self.occupancy.release(s.cell)?;
            self.sessions[u] = None;
            self.users[u].session = None;
            self.emit(EventKind::SessionEnd, u as u32, Some(s.id), Place::Cell(s.cell), Place::Nowhere, Outcome::Dropped, 0.0);
            self.charge_cell(s.cell, 0.0);
        }
        Ok(())
    }

    fn log_handover(&mut self, u: usize, s: &Session, target: CellIndex, label: Outcome, outcome: &HandoverOutcome) {
        self.emit(EventKind::HandoverEvaluation, u as u32, Some(s.id), Place::Cell(s.cell), Place::Cell(target), label, outcome.cost());
        self.kpis.handover(outcome.is_success());
        self.charge_cell(s.cell, outcome.cost());
    }
}

/// Higher score wins; equal scores go to the lower cell index.
fn beats(a: (CellIndex, f64), b: (CellIndex, f64)) -> bool {
    a.1 > b.1 || (a.1 == b.1 && a.0 < b.0)
}

/// Geometric session length (support 1, 2, ...) with success probability
/// `q`, by inverse CDF from a uniform draw in `[0, 1)`.
fn geometric_length(q: f64, draw: f64) -> u64 {
    if q >= 1.0 {
        return 1;
    }
    let u = 1.0 - draw; // (0, 1]
    let extra = (u.ln() / (1.0 - q).ln()).floor();
    1 + if extra.is_finite() { extra.min(u64::MAX as f64 / 2.0) as u64 } else { 0 }
}

/// Runs `scenario` to completion.
pub fn run(scenario: &Scenario) -> Result<RunOutput, SimError> {
    Ok(Simulation::new(scenario)?.finish())
}

/// One sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub report: KpiReport,
}

/// Runs `scenario` once per value of the dotted parameter `axis`, on at most
/// `threads` worker threads (all cores when `None`).
///
/// Closed-loop runs use seed `seed + index`; replayed-trace runs keep the
/// base seed so every value is evaluated against the same trace. Results
/// are in `values` order and do not depend on the thread count.
pub fn sweep(scenario: &Scenario, axis: &str, values: &[f64], threads: Option<usize>) -> Result<Vec<SweepPoint>, SimError> {
    let replay = scenario.handover.mode == EvaluationMode::ReplayedTrace;
    let variants = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut s = scenario.with_param(axis, v).map_err(|e| SimError::Sweep { value: v, source: Box::new(e.into()) })?;
            if !replay {
                s.seed = scenario.seed.wrapping_add(i as u64);
            }
            Ok((v, s))
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| SimError::ThreadPool(e.to_string()))?;
    pool.install(|| {
        variants
            .par_iter()
            .map(|(v, s)| {
                let sim = Simulation::new(s).map_err(|e| SimError::Sweep { value: *v, source: Box::new(e) })?;
                Ok(SweepPoint { value: *v, report: sim.without_log().finish().report })
            })
            .collect()
    })
}
