//! Two-region user mobility.
//!
//! Every user is anchored to a home hotspot and is either inside it or
//! outside. Per epoch, an inside user leaves with probability `p_exit` and an
//! outside user enters with probability `p_enter`; vehicular users scale both
//! by `vehicular_multiplier` (clamped to 1). At equilibrium the expected
//! number of exits equals the expected number of entries,
//! `N_in · p_exit = N_out · p_enter`, which fixes the stationary inside
//! probability at `p_enter / (p_enter + p_exit)`.
//!
//! The location predictor estimates the per-epoch exit probability from the
//! user's own transition history and turns it into the probability of leaving
//! within a horizon, `1 − (1 − p̂)^h`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Transitions kept per user.
pub const HISTORY_CAPACITY: usize = 64;

/// In-hotspot epochs that must be observed before the empirical exit
/// frequency replaces the configured prior.
pub const MIN_EVIDENCE_EPOCHS: u64 = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MobilityError {
    #[error("both effective transition probabilities are zero; no unique equilibrium")]
    Degenerate,
    #[error("location prediction requested for a user outside any hotspot")]
    NotInHotspot,
    #[error("prediction horizon must be at least one epoch")]
    ZeroHorizon,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilityParams {
    pub p_exit: f64,
    pub p_enter: f64,
    #[serde(default = "default_multiplier")]
    pub vehicular_multiplier: f64,
}

fn default_multiplier() -> f64 {
    4.0
}

impl MobilityParams {
    pub fn new(p_exit: f64, p_enter: f64) -> Self {
        MobilityParams { p_exit, p_enter, vehicular_multiplier: default_multiplier() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MobilityClass {
    Vehicular,
    NonVehicular,
}

/// Index of a hotspot in the scenario's hotspot list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HotspotIndex(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    InsideHotspot(HotspotIndex),
    Outside,
}

impl Region {
    pub fn is_inside(self) -> bool {
        matches!(self, Region::InsideHotspot(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transition {
    pub epoch: u64,
    /// `None` for the initial placement.
    pub from: Option<Region>,
    pub to: Region,
}

/// Per-user mobility state. `clock` counts the steps taken so far.
#[derive(Clone, Debug, PartialEq)]
pub struct UserState {
    pub user_id: u32,
    pub mobility_class: MobilityClass,
    pub home: HotspotIndex,
    pub region: Region,
    pub clock: u64,
    history: VecDeque<Transition>,
    pub session: Option<u64>,
}

impl UserState {
    /// A user placed in `region` at clock 0; the placement is the first
    /// history entry.
    pub fn new(user_id: u32, mobility_class: MobilityClass, home: HotspotIndex, inside: bool) -> Self {
        let region = if inside { Region::InsideHotspot(home) } else { Region::Outside };
        let mut history = VecDeque::with_capacity(HISTORY_CAPACITY);
        history.push_back(Transition { epoch: 0, from: None, to: region });
        UserState {
            user_id,
            mobility_class,
            home,
            region,
            clock: 0,
            history,
            session: None,
        }
    }

    pub fn history(&self) -> impl ExactSizeIterator<Item = &Transition> + '_ {
        self.history.iter()
    }

    /// In-place form of [`step_user`].
    pub fn step(&mut self, params: &MobilityParams, draw: f64) {
        let (p_exit, p_enter) = effective_probs(params, self.mobility_class);
        self.clock += 1;
        let inside = self.region.is_inside();
        if next_inside(inside, p_exit, p_enter, draw) != inside {
            let next = if inside { Region::Outside } else { Region::InsideHotspot(self.home) };
            let t = Transition { epoch: self.clock, from: Some(self.region), to: next };
            self.region = next;
            self.record(t);
        }
    }

    fn record(&mut self, t: Transition) {
        if self.history.len() == HISTORY_CAPACITY {
            self.history.pop_front();
        }
        self.history.push_back(t);
    }

    /// `(exits, in-hotspot epochs)` observed inside the retained history
    /// window. The stay that the oldest entry started is counted; the exit
    /// that led into the window is not.
    pub fn exit_evidence(&self) -> (u64, u64) {
        let mut exits = 0;
        let mut exposure = 0;
        let mut iter = self.history.iter().peekable();
        while let Some(t) = iter.next() {
            let until = iter.peek().map_or(self.clock, |next| next.epoch);
            if t.to.is_inside() {
                exposure += until - t.epoch;
                if iter.peek().is_some() {
                    exits += 1;
                }
            }
        }
        (exits, exposure)
    }
}

/// `(p_exit, p_enter)` for a user of `class`.
pub fn effective_probs(params: &MobilityParams, class: MobilityClass) -> (f64, f64) {
    match class {
        MobilityClass::NonVehicular => (params.p_exit, params.p_enter),
        MobilityClass::Vehicular => {
            let m = params.vehicular_multiplier;
            ((m * params.p_exit).min(1.0), (m * params.p_enter).min(1.0))
        }
    }
}

/// Advances one epoch. `draw` is a uniform sample from `[0, 1)`: an inside
/// user leaves iff `draw < p_exit`, an outside user enters iff
/// `draw < p_enter`.
pub fn step_user(mut state: UserState, params: &MobilityParams, draw: f64) -> UserState {
    state.step(params, draw);
    state
}

/// The bare two-state transition: whether a user is inside after one epoch.
/// An inside user leaves iff `draw < p_exit`; an outside user enters iff
/// `draw < p_enter`. Branch-free, so long chains run at RNG speed.
#[inline]
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn next_inside(inside: bool, p_exit: f64, p_enter: f64, draw: f64) -> bool {
    // Both comparisons, combined with bit operations: a select on the
    // unpredictable `inside` flag would compile to a mispredicted branch.
    let stays = !(draw < p_exit);
    let enters = draw < p_enter;
    (inside & stays) | (!inside & enters)
}

/// Equilibrium probability of being inside the hotspot.
pub fn stationary_occupancy(params: &MobilityParams, class: MobilityClass) -> Result<f64, MobilityError> {
    let (p_exit, p_enter) = effective_probs(params, class);
    if p_exit + p_enter <= 0.0 {
        return Err(MobilityError::Degenerate);
    }
    Ok(p_enter / (p_enter + p_exit))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Stay,
    Leave,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocationPrediction {
    pub verdict: Verdict,
    pub estimated_leave_probability: f64,
    pub evidence_count: u64,
}

impl LocationPrediction {
    /// Prediction from a leave probability; exactly 0.5 resolves to `Stay`.
    pub fn from_probability(p: f64, evidence_count: u64) -> Self {
        LocationPrediction {
            verdict: if p > 0.5 { Verdict::Leave } else { Verdict::Stay },
            estimated_leave_probability: p,
            evidence_count,
        }
    }
}

/// `1 − (1 − p)^h`: probability of at least one exit in `h` epochs.
pub fn leave_probability(p_exit: f64, horizon: u32) -> f64 {
    (1.0 - (1.0 - p_exit).powi(horizon as i32)).clamp(0.0, 1.0)
}

/// Predicts whether an in-hotspot user leaves within `remaining_epochs`.
pub fn predict_location(
    state: &UserState,
    remaining_epochs: u32,
    params: &MobilityParams,
) -> Result<LocationPrediction, MobilityError> {
    if !state.region.is_inside() {
        return Err(MobilityError::NotInHotspot);
    }
    if remaining_epochs == 0 {
        return Err(MobilityError::ZeroHorizon);
    }
    let (exits, exposure) = state.exit_evidence();
    let p_hat = if exposure >= MIN_EVIDENCE_EPOCHS {
        exits as f64 / exposure as f64
    } else {
        effective_probs(params, state.mobility_class).0
    };
    Ok(LocationPrediction::from_probability(leave_probability(p_hat, remaining_epochs), exposure))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, Purpose};
    use proptest::prelude::*;
    use rand::Rng;

    fn user(inside: bool, class: MobilityClass) -> UserState {
        UserState::new(0, class, HotspotIndex(0), inside)
    }

    #[test]
    fn effective_probabilities() {
        let nv = MobilityParams { p_exit: 0.1, p_enter: 0.2, vehicular_multiplier: 1.0 };
        assert_eq!(effective_probs(&nv, MobilityClass::NonVehicular), (0.1, 0.2));
        let v = MobilityParams { p_exit: 0.1, p_enter: 0.2, vehicular_multiplier: 4.0 };
        assert_eq!(effective_probs(&v, MobilityClass::Vehicular), (0.4, 0.8));
        let clamp = MobilityParams { p_exit: 0.3, p_enter: 0.5, vehicular_multiplier: 4.0 };
        assert_eq!(effective_probs(&clamp, MobilityClass::Vehicular), (1.0, 1.0));
    }

    #[test]
    fn absorbing_and_certain_transitions() {
        let params = MobilityParams { p_exit: 0.0, p_enter: 1.0, vehicular_multiplier: 1.0 };
        for draw in [0.0, 0.5, 0.999_999] {
            let s = step_user(user(true, MobilityClass::NonVehicular), &params, draw);
            assert!(s.region.is_inside());
            let s = step_user(user(false, MobilityClass::NonVehicular), &params, draw);
            assert_eq!(s.region, Region::InsideHotspot(HotspotIndex(0)));
        }
    }

    #[test]
    fn exit_threshold_is_strict() {
        let params = MobilityParams::new(0.3, 0.1);
        let s = step_user(user(true, MobilityClass::NonVehicular), &params, 0.29);
        assert_eq!(s.region, Region::Outside);
        let s = step_user(user(true, MobilityClass::NonVehicular), &params, 0.30);
        assert!(s.region.is_inside());
    }

    #[test]
    fn exit_frequency_over_a_million_draws() {
        let params = MobilityParams::new(0.3, 0.1);
        let mut rng = rng::stream(11, Purpose::Mobility, 0);
        let n = 1_000_000;
        let exits = (0..n)
            .filter(|_| {
                let s = step_user(user(true, MobilityClass::NonVehicular), &params, rng.gen());
                s.region == Region::Outside
            })
            .count();
        assert!((exits as f64 / n as f64 - 0.3).abs() < 0.005);
    }

    #[test]
    fn history_records_transitions_in_order() {
        let params = MobilityParams::new(1.0, 1.0);
        let mut s = user(true, MobilityClass::NonVehicular);
        for _ in 0..3 {
            s = step_user(s, &params, 0.5);
        }
        let epochs: Vec<u64> = s.history().map(|t| t.epoch).collect();
        assert_eq!(epochs, [0, 1, 2, 3]);
        assert_eq!(s.history().last().unwrap().to, s.region);
    }

    #[test]
    fn history_is_bounded() {
        let params = MobilityParams::new(1.0, 1.0);
        let mut s = user(true, MobilityClass::NonVehicular);
        for _ in 0..500 {
            s = step_user(s, &params, 0.0);
        }
        assert_eq!(s.history().len(), HISTORY_CAPACITY);
        assert_eq!(s.history().last().unwrap().epoch, 500);
    }

    #[test]
    fn stationary_values() {
        let occ = |pe, pn| stationary_occupancy(&MobilityParams::new(pe, pn), MobilityClass::NonVehicular);
        assert_eq!(occ(0.1, 0.1).unwrap(), 0.5);
        assert_eq!(occ(0.0, 0.2).unwrap(), 1.0);
        assert!((occ(0.3, 0.1).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(occ(0.0, 0.0), Err(MobilityError::Degenerate));
    }

    #[test]
    fn simulated_occupancy_matches_closed_form() {
        // 10^6 steps split over 100 users, time-averaged.
        let params = MobilityParams::new(0.3, 0.1);
        let mut inside = 0u64;
        let mut total = 0u64;
        for u in 0..100 {
            let mut rng = rng::stream(5, Purpose::Mobility, u);
            let mut s = user(u % 4 == 0, MobilityClass::NonVehicular);
            for _ in 0..10_000 {
                s = step_user(s, &params, rng.gen());
                inside += s.region.is_inside() as u64;
                total += 1;
            }
        }
        let measured = inside as f64 / total as f64;
        assert!((measured - 0.25).abs() < 0.01, "{measured}");
    }

    #[test]
    fn prediction_edge_cases() {
        let params = MobilityParams::new(0.2, 0.2);
        assert_eq!(
            predict_location(&user(false, MobilityClass::NonVehicular), 3, &params),
            Err(MobilityError::NotInHotspot)
        );
        assert_eq!(
            predict_location(&user(true, MobilityClass::NonVehicular), 0, &params),
            Err(MobilityError::ZeroHorizon)
        );

        // Never left in 20 observed epochs.
        let never = MobilityParams::new(0.0, 0.0);
        let mut s = user(true, MobilityClass::NonVehicular);
        for _ in 0..20 {
            s = step_user(s, &never, 0.5);
        }
        let p = predict_location(&s, 50, &params).unwrap();
        assert_eq!((p.verdict, p.estimated_leave_probability, p.evidence_count), (Verdict::Stay, 0.0, 20));

        // Left after every single inside epoch.
        let flip = MobilityParams::new(1.0, 1.0);
        let mut s = user(true, MobilityClass::NonVehicular);
        for _ in 0..12 {
            s = step_user(s, &flip, 0.5);
        }
        assert!(s.region.is_inside());
        let (exits, exposure) = s.exit_evidence();
        assert_eq!((exits, exposure), (6, 6));
        let p = predict_location(&s, 1, &params).unwrap();
        assert_eq!((p.verdict, p.estimated_leave_probability), (Verdict::Leave, 1.0));
    }

    #[test]
    fn thin_history_falls_back_to_prior() {
        let params = MobilityParams::new(0.1, 0.1);
        let s = user(true, MobilityClass::NonVehicular);
        let p = predict_location(&s, 10, &params).unwrap();
        assert_eq!(p.evidence_count, 0);
        assert!((p.estimated_leave_probability - leave_probability(0.1, 10)).abs() < 1e-15);
    }

    #[test]
    fn ten_epoch_survival_by_enumeration() {
        // Enumerate all 2^10 exit/stay patterns; the user leaves unless every
        // epoch is a stay.
        let p: f64 = 0.1;
        let mut leave = 0.0;
        for mask in 0u32..1 << 10 {
            let k = mask.count_ones() as i32;
            if k > 0 {
                leave += p.powi(k) * (1.0 - p).powi(10 - k);
            }
        }
        assert!((leave - 0.651_321_559_9).abs() < 1e-9);
        assert!((leave_probability(p, 10) - leave).abs() < 1e-12);
        assert_eq!(LocationPrediction::from_probability(leave, 0).verdict, Verdict::Leave);
        assert_eq!(LocationPrediction::from_probability(0.5, 0).verdict, Verdict::Stay);
    }

    proptest! {
        #[test]
        fn step_is_deterministic(inside: bool, veh: bool, pe in 0.0f64..=1.0, pn in 0.0f64..=1.0, draw in 0.0f64..1.0) {
            let class = if veh { MobilityClass::Vehicular } else { MobilityClass::NonVehicular };
            let params = MobilityParams::new(pe, pn);
            let a = step_user(user(inside, class), &params, draw);
            let b = step_user(user(inside, class), &params, draw);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn kernel_matches_plain_rule(inside: bool, pe in 0.0f64..=1.0, pn in 0.0f64..=1.0, draw in 0.0f64..1.0) {
            let plain = if inside { draw >= pe } else { draw < pn };
            prop_assert_eq!(next_inside(inside, pe, pn, draw), plain);
            let stepped = step_user(user(inside, MobilityClass::NonVehicular), &MobilityParams::new(pe, pn), draw);
            prop_assert_eq!(stepped.region.is_inside(), plain);
        }

        #[test]
        fn vehicular_dominates(pe in 0.0f64..=1.0, pn in 0.0f64..=1.0, m in 1.0f64..10.0) {
            let params = MobilityParams { p_exit: pe, p_enter: pn, vehicular_multiplier: m };
            let (ve, vn) = effective_probs(&params, MobilityClass::Vehicular);
            let (ne, nn) = effective_probs(&params, MobilityClass::NonVehicular);
            prop_assert!(ve >= ne && vn >= nn);
        }

        #[test]
        fn leave_probability_is_monotone(p in 0.0f64..=1.0, dp in 0.0f64..0.5, h in 1u32..200, dh in 0u32..50) {
            let base = leave_probability(p, h);
            prop_assert!(leave_probability(p, h + dh) >= base);
            prop_assert!(leave_probability((p + dp).min(1.0), h) >= base);
        }
    }
}
