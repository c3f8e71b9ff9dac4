//! Joint radio resource management decisions.
//!
//! RAT selection for a new session follows a fixed decision table:
//!
//! | region  | mobility       | service      | prediction | target |
//! |---------|----------------|--------------|------------|--------|
//! | outside | any            | any          | -          | LTE    |
//! | inside  | vehicular      | any          | -          | LTE    |
//! | inside  | non-vehicular  | non-realtime | -          | WLAN   |
//! | inside  | non-vehicular  | realtime     | stay       | WLAN   |
//! | inside  | non-vehicular  | realtime     | leave      | LTE    |
//!
//! A WLAN target that has no room falls back to the overlaying cellular cell.
//! Handovers of admitted sessions are gated by a score margin and a minimum
//! dwell time; raising either "hardens" the handover threshold.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::Priority;
use crate::mobility::{LocationPrediction, MobilityClass, Verdict};
use crate::scenario::{RatKind, SignallingCostModel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JrrmError {
    #[error("real-time session inside a hotspot needs a location prediction")]
    MissingPrediction,
    #[error("unknown cell index {0}")]
    UnknownCell(u32),
    #[error("cell {0} has no session to release")]
    EmptyCell(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ServiceClass {
    RealTime,
    NonRealTime,
}

/// Which way the two prediction branches resolve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PredictionSemantics {
    /// Predicted stay → WLAN, predicted leave → LTE.
    #[default]
    Table,
    /// Predicted leave → WLAN, predicted stay → LTE.
    Prose,
}

impl PredictionSemantics {
    pub fn from_table2_flag(table2: bool) -> Self {
        if table2 {
            PredictionSemantics::Table
        } else {
            PredictionSemantics::Prose
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UserContext {
    pub inside_hotspot: bool,
    pub mobility_class: MobilityClass,
    pub service_class: ServiceClass,
    pub priority: Priority,
    pub prediction: Option<LocationPrediction>,
}

/// The decision-table row that produced a [`RatDecision`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RatRule {
    OutsideHotspot,
    VehicularInHotspot,
    NonRealTimeWlan,
    RealTimeStayWlan,
    RealTimeLeaveLte,
    /// Prose reading: predicted stay goes to LTE.
    RealTimeStayLte,
    /// Prose reading: predicted leave goes to WLAN.
    RealTimeLeaveWlan,
    /// WLAN was full and the overlay cell took the session.
    CapacityFallback,
}

impl RatRule {
    pub const ALL: [RatRule; 8] = [
        RatRule::OutsideHotspot,
        RatRule::VehicularInHotspot,
        RatRule::NonRealTimeWlan,
        RatRule::RealTimeStayWlan,
        RatRule::RealTimeLeaveLte,
        RatRule::RealTimeStayLte,
        RatRule::RealTimeLeaveWlan,
        RatRule::CapacityFallback,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RatRule::OutsideHotspot => "OutsideHotspot",
            RatRule::VehicularInHotspot => "VehicularInHotspot",
            RatRule::NonRealTimeWlan => "NonRealTimeWlan",
            RatRule::RealTimeStayWlan => "RealTimeStayWlan",
            RatRule::RealTimeLeaveLte => "RealTimeLeaveLte",
            RatRule::RealTimeStayLte => "RealTimeStayLte",
            RatRule::RealTimeLeaveWlan => "RealTimeLeaveWlan",
            RatRule::CapacityFallback => "CapacityFallback",
        }
    }

    pub fn from_name(name: &str) -> Option<RatRule> {
        RatRule::ALL.into_iter().find(|r| r.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RatDecision {
    /// `Lte` stands for "the cellular layer"; admission maps it onto the
    /// hotspot's overlay cell whatever that cell's RAT.
    pub target: RatKind,
    pub rule: RatRule,
}

pub fn select_rat(ctx: &UserContext, semantics: PredictionSemantics) -> Result<RatDecision, JrrmError> {
    let decide = |target, rule| Ok(RatDecision { target, rule });
    if !ctx.inside_hotspot {
        return decide(RatKind::Lte, RatRule::OutsideHotspot);
    }
    if ctx.mobility_class == MobilityClass::Vehicular {
        return decide(RatKind::Lte, RatRule::VehicularInHotspot);
    }
    if ctx.service_class == ServiceClass::NonRealTime {
        return decide(RatKind::Wlan80211, RatRule::NonRealTimeWlan);
    }
    let verdict = ctx.prediction.ok_or(JrrmError::MissingPrediction)?.verdict;
    match (semantics, verdict) {
        (PredictionSemantics::Table, Verdict::Stay) => decide(RatKind::Wlan80211, RatRule::RealTimeStayWlan),
        (PredictionSemantics::Table, Verdict::Leave) => decide(RatKind::Lte, RatRule::RealTimeLeaveLte),
        (PredictionSemantics::Prose, Verdict::Stay) => decide(RatKind::Lte, RatRule::RealTimeStayLte),
        (PredictionSemantics::Prose, Verdict::Leave) => decide(RatKind::Wlan80211, RatRule::RealTimeLeaveWlan),
    }
}

/// Index of a cell in scenario order (sites, then cells within a site).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellIndex(pub u32);

impl CellIndex {
    fn get(self) -> usize {
        self.0 as usize
    }
}

/// A hotspot's WLAN cell and the cellular cell overlaying it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HotspotCells {
    pub wlan: CellIndex,
    pub overlay: CellIndex,
}

/// Per-cell session counts. Counts never exceed capacities: every mutation
/// goes through methods that check room first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Occupancy {
    counts: Vec<u32>,
    capacity: Vec<u32>,
}

impl Occupancy {
    pub fn new(capacity: Vec<u32>) -> Self {
        Occupancy { counts: vec![0; capacity.len()], capacity }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    fn check(&self, c: CellIndex) -> Result<usize, JrrmError> {
        if c.get() < self.counts.len() {
            Ok(c.get())
        } else {
            Err(JrrmError::UnknownCell(c.0))
        }
    }

    pub fn count(&self, c: CellIndex) -> u32 {
        self.counts[c.get()]
    }

    pub fn capacity(&self, c: CellIndex) -> u32 {
        self.capacity[c.get()]
    }

    pub fn has_room(&self, c: CellIndex) -> Result<bool, JrrmError> {
        let i = self.check(c)?;
        Ok(self.counts[i] < self.capacity[i])
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&n| n as u64).sum()
    }

    /// Releases one session from `c`.
    pub fn release(&mut self, c: CellIndex) -> Result<(), JrrmError> {
        let i = self.check(c)?;
        if self.counts[i] == 0 {
            return Err(JrrmError::EmptyCell(c.0));
        }
        self.counts[i] -= 1;
        Ok(())
    }

    fn take(&mut self, i: usize) -> bool {
        if self.counts[i] < self.capacity[i] {
            self.counts[i] += 1;
            true
        } else {
            false
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdmissionResult {
    Admitted(CellIndex),
    FallbackAdmitted(CellIndex),
    Blocked,
}

/// Admits a new session per `decision`, taking a slot on success. A WLAN
/// target without room falls back to the overlay cell; a cellular target
/// has no fallback.
pub fn admit(decision: &RatDecision, hotspot: &HotspotCells, occupancy: &mut Occupancy) -> Result<AdmissionResult, JrrmError> {
    let wlan = occupancy.check(hotspot.wlan)?;
    let overlay = occupancy.check(hotspot.overlay)?;
    if decision.target == RatKind::Wlan80211 {
        if occupancy.take(wlan) {
            return Ok(AdmissionResult::Admitted(hotspot.wlan));
        }
        if occupancy.take(overlay) {
            return Ok(AdmissionResult::FallbackAdmitted(hotspot.overlay));
        }
        return Ok(AdmissionResult::Blocked);
    }
    if occupancy.take(overlay) {
        Ok(AdmissionResult::Admitted(hotspot.overlay))
    } else {
        Ok(AdmissionResult::Blocked)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HysteresisConfig {
    pub score_margin: f64,
    pub min_dwell_epochs: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HandoverAction {
    None,
    Attempt { target: CellIndex, score_gain: f64 },
}

/// Attempt iff the candidate beats the current score by strictly more than
/// the margin and the session has dwelt long enough.
pub fn evaluate_handover(
    current_score: f64,
    candidate: (CellIndex, f64),
    cfg: &HysteresisConfig,
    dwell_epochs: u32,
) -> HandoverAction {
    let gain = candidate.1 - current_score;
    if gain > cfg.score_margin && dwell_epochs >= cfg.min_dwell_epochs {
        HandoverAction::Attempt { target: candidate.0, score_gain: gain }
    } else {
        HandoverAction::None
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HandoverOutcome {
    Success { cost: f64 },
    Failure { cost: f64 },
}

impl HandoverOutcome {
    pub fn cost(&self) -> f64 {
        match *self {
            HandoverOutcome::Success { cost } | HandoverOutcome::Failure { cost } => cost,
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, HandoverOutcome::Success { .. })
    }
}

/// What executing a handover into `target` would yield, without moving anything.
pub fn probe_handover(target: CellIndex, occupancy: &Occupancy, signalling: &SignallingCostModel) -> Result<HandoverOutcome, JrrmError> {
    Ok(if occupancy.has_room(target)? {
        HandoverOutcome::Success { cost: signalling.cost_ho_attempt + signalling.cost_ho_complete }
    } else {
        HandoverOutcome::Failure { cost: signalling.cost_ho_attempt }
    })
}

/// Moves one session from `from` to `target` if the target has room.
pub fn execute_handover(
    from: CellIndex,
    target: CellIndex,
    occupancy: &mut Occupancy,
    signalling: &SignallingCostModel,
) -> Result<HandoverOutcome, JrrmError> {
    let src = occupancy.check(from)?;
    let outcome = probe_handover(target, occupancy, signalling)?;
    if outcome.is_success() {
        if occupancy.counts[src] == 0 {
            return Err(JrrmError::EmptyCell(from.0));
        }
        occupancy.counts[src] -= 1;
        let taken = occupancy.take(target.get());
        debug_assert!(taken);
    }
    Ok(outcome)
}

/// One handover-evaluation instant of a recorded trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HandoverSample {
    pub current_score: f64,
    pub candidate_score: f64,
    pub dwell_epochs: u32,
}

/// Number of attempts `cfg` would trigger over a fixed trace.
pub fn replay_attempts(trace: &[HandoverSample], cfg: &HysteresisConfig) -> usize {
    trace
        .iter()
        .filter(|s| {
            matches!(
                evaluate_handover(s.current_score, (CellIndex(0), s.candidate_score), cfg, s.dwell_epochs),
                HandoverAction::Attempt { .. }
            )
        })
        .count()
}
