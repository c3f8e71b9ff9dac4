//! Fuzzy multi-criteria network scoring.
//!
//! Each candidate network is described by five criteria: monetary cost (C),
//! bandwidth (B), received signal strength (R), user priority (U) and delay (D).
//! The four numeric criteria are fuzzified over three trapezoidal linguistic
//! sets each; the priority is categorical and maps crisply onto its own label.
//!
//! Defuzzification is a weighted sum of per-criterion expected label
//! utilities:
//!
//! ```text
//! score = Σ_i w_i · (Σ_label degree_i(label) · utility_i(label)) / Σ_i w_i
//! ```
//!
//! The priority utility depends on the kind of network being scored (a
//! best-effort WLAN favours insensitive users, a QoS cellular network favours
//! high-QoS users), which is why [`score_network`] takes the candidate's
//! [`RatKind`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::RatKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FuzzyError {
    #[error("weight vector sums to zero")]
    ZeroWeights,
    #[error("no candidate networks to rank")]
    EmptyCandidates,
}

/// User priority class (the categorical `U` criterion).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Priority {
    Insensitive,
    Ordinary,
    #[serde(rename = "HighQoS")]
    HighQoS,
}

impl Priority {
    pub const ALL: [Priority; 3] = [Priority::Insensitive, Priority::Ordinary, Priority::HighQoS];

    pub fn label(self) -> &'static str {
        match self {
            Priority::Insensitive => "Insensitive",
            Priority::Ordinary => "Ordinary",
            Priority::HighQoS => "HighQoS",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The five decision criteria, in weight-vector order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Criterion {
    Cost,
    Bandwidth,
    Rss,
    Priority,
    Delay,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::Cost,
        Criterion::Bandwidth,
        Criterion::Rss,
        Criterion::Priority,
        Criterion::Delay,
    ];

    pub const NUMERIC: [Criterion; 4] =
        [Criterion::Cost, Criterion::Bandwidth, Criterion::Rss, Criterion::Delay];

    /// Key used in the scenario document.
    pub fn key(self) -> &'static str {
        match self {
            Criterion::Cost => "cost",
            Criterion::Bandwidth => "bandwidth",
            Criterion::Rss => "rss",
            Criterion::Priority => "priority",
            Criterion::Delay => "delay",
        }
    }
}

/// Static per-network criteria: cost in cents/Kb, bandwidth in Mbit/s, RSS in
/// dBm and delay in ms. Priority is a property of the session, not the cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkCriteria {
    pub cost: f64,
    pub bandwidth: f64,
    pub rss: f64,
    pub delay: f64,
}

impl NetworkCriteria {
    pub fn with_priority(self, priority: Priority) -> CriteriaVector {
        CriteriaVector {
            cost: self.cost,
            bandwidth: self.bandwidth,
            rss: self.rss,
            priority,
            delay: self.delay,
        }
    }
}

/// One candidate network as seen by one session at one decision instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriteriaVector {
    pub cost: f64,
    pub bandwidth: f64,
    pub rss: f64,
    pub priority: Priority,
    pub delay: f64,
}

impl CriteriaVector {
    /// Value of a numeric criterion; `None` for [`Criterion::Priority`].
    pub fn numeric(&self, c: Criterion) -> Option<f64> {
        match c {
            Criterion::Cost => Some(self.cost),
            Criterion::Bandwidth => Some(self.bandwidth),
            Criterion::Rss => Some(self.rss),
            Criterion::Delay => Some(self.delay),
            Criterion::Priority => None,
        }
    }

    pub fn set_numeric(&mut self, c: Criterion, value: f64) {
        match c {
            Criterion::Cost => self.cost = value,
            Criterion::Bandwidth => self.bandwidth = value,
            Criterion::Rss => self.rss = value,
            Criterion::Delay => self.delay = value,
            Criterion::Priority => {}
        }
    }
}

/// Trapezoid breakpoints `a ≤ b ≤ c ≤ d`, serialized as a 4-array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Trapezoid {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl From<[f64; 4]> for Trapezoid {
    fn from([a, b, c, d]: [f64; 4]) -> Self {
        Trapezoid { a, b, c, d }
    }
}

impl From<Trapezoid> for [f64; 4] {
    fn from(t: Trapezoid) -> Self {
        [t.a, t.b, t.c, t.d]
    }
}

impl Trapezoid {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Trapezoid { a, b, c, d }
    }

    pub fn is_ordered(&self) -> bool {
        [self.a, self.b, self.c, self.d].iter().all(|v| v.is_finite())
            && self.a <= self.b
            && self.b <= self.c
            && self.c <= self.d
    }

    /// Membership degree: 1 on `[b, c]`, 0 outside `[a, d]`, linear between.
    pub fn degree(&self, x: f64) -> f64 {
        if x >= self.b && x <= self.c {
            1.0
        } else if x < self.a || x > self.d {
            0.0
        } else if x < self.b {
            // a ≤ x < b, so b > a.
            (x - self.a) / (self.b - self.a)
        } else {
            // c < x ≤ d, so d > c.
            (self.d - x) / (self.d - self.c)
        }
    }

    pub fn breakpoints(&self) -> [f64; 4] {
        (*self).into()
    }
}

/// A linguistic label with its trapezoid and the utility the label carries
/// when defuzzifying (best label 1, worst 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MembershipFunction {
    pub label: String,
    pub trapezoid: Trapezoid,
    pub utility: f64,
}

impl MembershipFunction {
    pub fn new(label: &str, breakpoints: [f64; 4], utility: f64) -> Self {
        MembershipFunction {
            label: label.to_string(),
            trapezoid: breakpoints.into(),
            utility,
        }
    }
}

pub fn membership(mf: &MembershipFunction, x: f64) -> f64 {
    mf.trapezoid.degree(x)
}

/// The ordered fuzzy sets of one numeric criterion over its universe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionSets {
    pub universe: [f64; 2],
    pub sets: Vec<MembershipFunction>,
}

impl CriterionSets {
    /// Clamps `x` into the universe; the flag reports whether clamping happened.
    pub fn clamp(&self, x: f64) -> (f64, bool) {
        let [lo, hi] = self.universe;
        if x < lo {
            (lo, true)
        } else if x > hi {
            (hi, true)
        } else {
            (x, false)
        }
    }

    pub fn degrees(&self, x: f64) -> Vec<LabelDegree> {
        self.sets
            .iter()
            .map(|mf| LabelDegree {
                label: mf.label.clone(),
                degree: membership(mf, x),
            })
            .collect()
    }

    /// `Σ degree(label) · utility(label)` for an already clamped value.
    pub fn expected_utility(&self, x: f64) -> f64 {
        self.sets
            .iter()
            .map(|mf| membership(mf, x) * mf.utility)
            .sum()
    }

    /// Largest `|Σ degrees − 1|` over `samples` evenly spaced universe points
    /// plus every breakpoint inside the universe.
    pub fn partition_error(&self, samples: usize) -> f64 {
        let [lo, hi] = self.universe;
        let n = samples.max(2);
        let grid = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64);
        let knots = self
            .sets
            .iter()
            .flat_map(|mf| mf.trapezoid.breakpoints())
            .filter(|x| *x >= lo && *x <= hi);
        grid.chain(knots)
            .map(|x| {
                let sum: f64 = self.sets.iter().map(|mf| membership(mf, x)).sum();
                (sum - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Priority utilities for one kind of network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorityUtility {
    #[serde(rename = "Insensitive")]
    pub insensitive: f64,
    #[serde(rename = "Ordinary")]
    pub ordinary: f64,
    #[serde(rename = "HighQoS")]
    pub high_qos: f64,
}

impl PriorityUtility {
    pub fn get(&self, p: Priority) -> f64 {
        match p {
            Priority::Insensitive => self.insensitive,
            Priority::Ordinary => self.ordinary,
            Priority::HighQoS => self.high_qos,
        }
    }

    fn values(&self) -> [f64; 3] {
        [self.insensitive, self.ordinary, self.high_qos]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorityUtilityTable {
    #[serde(rename = "Lte")]
    pub lte: PriorityUtility,
    #[serde(rename = "Umts")]
    pub umts: PriorityUtility,
    #[serde(rename = "Wlan80211")]
    pub wlan: PriorityUtility,
}

impl PriorityUtilityTable {
    pub fn for_rat(&self, rat: RatKind) -> &PriorityUtility {
        match rat {
            RatKind::Lte => &self.lte,
            RatKind::Umts => &self.umts,
            RatKind::Wlan80211 => &self.wlan,
        }
    }
}

/// Criterion weights in `(C, B, R, U, D)` order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Weights(pub [f64; 5]);

impl Weights {
    pub fn get(&self, c: Criterion) -> f64 {
        self.0[c as usize]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Reference weight vector, in criterion order (C, B, R, U, D).
pub const REFERENCE_WEIGHTS: Weights = Weights([0.0625, 0.0791, 0.0211, 0.0981, 0.4991]);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuzzyConfig {
    pub cost: CriterionSets,
    pub bandwidth: CriterionSets,
    pub rss: CriterionSets,
    pub delay: CriterionSets,
    pub priority_utility: PriorityUtilityTable,
    pub weights: Weights,
}

impl Default for FuzzyConfig {
    /// Breakpoints put the WLAN and UMTS reference rows on the best and worst
    /// plateaus of every numeric criterion.
    fn default() -> Self {
        let mf = MembershipFunction::new;
        let best_effort = PriorityUtility { insensitive: 1.0, ordinary: 0.5, high_qos: 0.0 };
        let qos = PriorityUtility { insensitive: 0.0, ordinary: 0.5, high_qos: 1.0 };
        FuzzyConfig {
            cost: CriterionSets {
                universe: [0.0, 0.25],
                sets: vec![
                    mf("Economic", [0.0, 0.0, 0.01, 0.04], 1.0),
                    mf("Normal", [0.01, 0.04, 0.07, 0.1], 0.5),
                    mf("Expensive", [0.07, 0.1, 0.25, 0.25], 0.0),
                ],
            },
            bandwidth: CriterionSets {
                universe: [0.0, 20.0],
                sets: vec![
                    mf("Poor", [0.0, 0.0, 1.0, 2.5], 0.0),
                    mf("Med", [1.0, 2.5, 4.5, 6.0], 0.5),
                    mf("Good", [4.5, 6.0, 20.0, 20.0], 1.0),
                ],
            },
            rss: CriterionSets {
                universe: [-110.0, 40.0],
                sets: vec![
                    mf("Low", [-110.0, -110.0, -90.0, -70.0], 0.0),
                    mf("Normal", [-90.0, -70.0, -20.0, 0.0], 0.5),
                    mf("High", [-20.0, 0.0, 40.0, 40.0], 1.0),
                ],
            },
            delay: CriterionSets {
                universe: [0.0, 25.0],
                sets: vec![
                    mf("Low", [0.0, 0.0, 5.0, 8.0], 1.0),
                    mf("Med", [5.0, 8.0, 12.0, 15.0], 0.5),
                    mf("High", [12.0, 15.0, 25.0, 25.0], 0.0),
                ],
            },
            priority_utility: PriorityUtilityTable { lte: qos, umts: qos, wlan: best_effort },
            weights: REFERENCE_WEIGHTS,
        }
    }
}

impl FuzzyConfig {
    pub fn sets(&self, c: Criterion) -> Option<&CriterionSets> {
        match c {
            Criterion::Cost => Some(&self.cost),
            Criterion::Bandwidth => Some(&self.bandwidth),
            Criterion::Rss => Some(&self.rss),
            Criterion::Delay => Some(&self.delay),
            Criterion::Priority => None,
        }
    }

    pub fn sets_mut(&mut self, c: Criterion) -> Option<&mut CriterionSets> {
        match c {
            Criterion::Cost => Some(&mut self.cost),
            Criterion::Bandwidth => Some(&mut self.bandwidth),
            Criterion::Rss => Some(&mut self.rss),
            Criterion::Delay => Some(&mut self.delay),
            Criterion::Priority => None,
        }
    }

    /// Structural problems as `(path relative to the config, message)`.
    pub fn problems(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for c in Criterion::NUMERIC {
            let sets = self.sets(c).expect("numeric criterion");
            let key = c.key();
            let [lo, hi] = sets.universe;
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                out.push((format!("{key}.universe"), format!("needs lo < hi, got [{lo}, {hi}]")));
                continue;
            }
            if sets.sets.is_empty() {
                out.push((format!("{key}.sets"), "at least one fuzzy set required".into()));
                continue;
            }
            let mut ordered = true;
            for (i, mf) in sets.sets.iter().enumerate() {
                if !mf.trapezoid.is_ordered() {
                    ordered = false;
                    out.push((
                        format!("{key}.sets[{i}].trapezoid"),
                        format!("breakpoints must satisfy a <= b <= c <= d, got {:?}", mf.trapezoid.breakpoints()),
                    ));
                }
                if !(0.0..=1.0).contains(&mf.utility) {
                    out.push((format!("{key}.sets[{i}].utility"), format!("{} not in [0, 1]", mf.utility)));
                }
            }
            if ordered {
                let err = sets.partition_error(1001);
                if err > 1e-9 {
                    out.push((
                        format!("{key}.sets"),
                        format!("degrees do not sum to 1 over the universe (max deviation {err:e})"),
                    ));
                }
            }
        }
        for (name, table) in [
            ("Lte", &self.priority_utility.lte),
            ("Umts", &self.priority_utility.umts),
            ("Wlan80211", &self.priority_utility.wlan),
        ] {
            for (p, v) in Priority::ALL.iter().zip(table.values()) {
                if !(0.0..=1.0).contains(&v) {
                    out.push((format!("priority_utility.{name}.{p}"), format!("{v} not in [0, 1]")));
                }
            }
        }
        for (c, w) in Criterion::ALL.iter().zip(self.weights.0) {
            if !(w.is_finite() && w >= 0.0) {
                out.push((format!("weights[{}]", *c as usize), format!("weight for {} must be >= 0, got {w}", c.key())));
            }
        }
        if self.weights.0.iter().all(|w| *w == 0.0) {
            out.push(("weights".into(), "all weights are zero".into()));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelDegree {
    pub label: String,
    pub degree: f64,
}

/// Membership degrees of every label, per criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct FuzzifiedVector {
    pub cost: Vec<LabelDegree>,
    pub bandwidth: Vec<LabelDegree>,
    pub rss: Vec<LabelDegree>,
    pub priority: Vec<LabelDegree>,
    pub delay: Vec<LabelDegree>,
    /// Numeric criteria whose input fell outside the universe and was clamped.
    pub clamped: Vec<Criterion>,
}

impl FuzzifiedVector {
    pub fn get(&self, c: Criterion) -> &[LabelDegree] {
        match c {
            Criterion::Cost => &self.cost,
            Criterion::Bandwidth => &self.bandwidth,
            Criterion::Rss => &self.rss,
            Criterion::Priority => &self.priority,
            Criterion::Delay => &self.delay,
        }
    }

    pub fn degree(&self, c: Criterion, label: &str) -> Option<f64> {
        self.get(c).iter().find(|l| l.label == label).map(|l| l.degree)
    }
}

pub fn fuzzify(v: &CriteriaVector, cfg: &FuzzyConfig) -> FuzzifiedVector {
    let mut clamped = Vec::new();
    let mut numeric = |c: Criterion| {
        let sets = cfg.sets(c).expect("numeric criterion");
        let (x, was_clamped) = sets.clamp(v.numeric(c).expect("numeric criterion"));
        if was_clamped {
            clamped.push(c);
        }
        sets.degrees(x)
    };
    let cost = numeric(Criterion::Cost);
    let bandwidth = numeric(Criterion::Bandwidth);
    let rss = numeric(Criterion::Rss);
    let delay = numeric(Criterion::Delay);
    let priority = Priority::ALL
        .iter()
        .map(|p| LabelDegree {
            label: p.label().to_string(),
            degree: if *p == v.priority { 1.0 } else { 0.0 },
        })
        .collect();
    FuzzifiedVector { cost, bandwidth, rss, priority, delay, clamped }
}

/// Weighted defuzzified score in `[0, 1]` of network kind `rat` with
/// criteria `v`.
pub fn score_network(v: &CriteriaVector, rat: RatKind, cfg: &FuzzyConfig) -> Result<f64, FuzzyError> {
    let total = cfg.weights.total();
    if total <= 0.0 {
        return Err(FuzzyError::ZeroWeights);
    }
    let mut weighted = 0.0;
    for c in Criterion::ALL {
        let utility = match cfg.sets(c) {
            Some(sets) => sets.expected_utility(sets.clamp(v.numeric(c).expect("numeric")).0),
            None => cfg.priority_utility.for_rat(rat).get(v.priority),
        };
        weighted += cfg.weights.get(c) * utility;
    }
    Ok((weighted / total).clamp(0.0, 1.0))
}

/// A network offered to [`rank_networks`].
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub id: String,
    pub rat: RatKind,
    pub criteria: CriteriaVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankedNetwork {
    pub id: String,
    pub score: f64,
}

/// Scores every candidate; best first, ties broken by ascending id.
pub fn rank_networks(candidates: &[Candidate], cfg: &FuzzyConfig) -> Result<Vec<RankedNetwork>, FuzzyError> {
    if candidates.is_empty() {
        return Err(FuzzyError::EmptyCandidates);
    }
    let mut ranked = candidates
        .iter()
        .map(|c| {
            Ok(RankedNetwork {
                id: c.id.clone(),
                score: score_network(&c.criteria, c.rat, cfg)?,
            })
        })
        .collect::<Result<Vec<_>, FuzzyError>>()?;
    ranked.sort_by(|x, y| y.score.total_cmp(&x.score).then_with(|| x.id.cmp(&y.id)));
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const WLAN: NetworkCriteria = NetworkCriteria { cost: 0.001, bandwidth: 11.0, rss: 38.0, delay: 1.25 };
    const UMTS: NetworkCriteria = NetworkCriteria { cost: 0.220, bandwidth: 0.5, rss: -100.0, delay: 18.54 };

    #[test]
    fn plateau_and_outside_support() {
        let t = Trapezoid::new(0.0, 2.0, 4.0, 6.0);
        assert_eq!(t.degree(3.0), 1.0);
        assert_eq!(t.degree(-0.1), 0.0);
        assert_eq!(t.degree(6.1), 0.0);
    }

    #[test]
    fn rising_edge_matches_dense_sampling() {
        // Dense sampling: the area under the rising edge over [0, x] is x²/4
        // for a line through (0, 0) and (2, 1); its derivative at x=1 is 0.5.
        let t = Trapezoid::new(0.0, 2.0, 4.0, 6.0);
        let n = 200_000;
        let h = 1.0 / n as f64;
        let area: f64 = (0..n).map(|i| t.degree((i as f64 + 0.5) * h) * h).sum();
        assert!((area - 0.25).abs() < 1e-9);
        let slope_area = (0..n).map(|i| t.degree(1.0 + (i as f64 + 0.5) * h * 1e-3) * h * 1e-3).sum::<f64>();
        assert!((slope_area / 1e-3 - 0.50025).abs() < 1e-6);
        assert_eq!(t.degree(1.0), 0.5);
    }

    #[test]
    fn degenerate_shoulders_do_not_divide_by_zero() {
        let left = Trapezoid::new(0.0, 0.0, 1.0, 2.0);
        assert_eq!(left.degree(0.0), 1.0);
        let right = Trapezoid::new(1.0, 2.0, 3.0, 3.0);
        assert_eq!(right.degree(3.0), 1.0);
        let spike = Trapezoid::new(1.0, 1.0, 1.0, 1.0);
        assert_eq!(spike.degree(1.0), 1.0);
        assert_eq!(spike.degree(1.0 + 1e-12), 0.0);
    }

    #[test]
    fn reference_wlan_row_lands_on_best_plateaus() {
        let cfg = FuzzyConfig::default();
        let f = fuzzify(&WLAN.with_priority(Priority::Ordinary), &cfg);
        assert_eq!(f.degree(Criterion::Cost, "Economic"), Some(1.0));
        assert_eq!(f.degree(Criterion::Bandwidth, "Good"), Some(1.0));
        assert_eq!(f.degree(Criterion::Rss, "High"), Some(1.0));
        assert_eq!(f.degree(Criterion::Delay, "Low"), Some(1.0));
        assert_eq!(f.degree(Criterion::Priority, "Ordinary"), Some(1.0));
        assert_eq!(f.degree(Criterion::Priority, "HighQoS"), Some(0.0));
        assert!(f.clamped.is_empty());
    }

    #[test]
    fn reference_umts_row_lands_on_worst_plateaus() {
        let cfg = FuzzyConfig::default();
        let f = fuzzify(&UMTS.with_priority(Priority::HighQoS), &cfg);
        assert_eq!(f.degree(Criterion::Cost, "Expensive"), Some(1.0));
        assert_eq!(f.degree(Criterion::Bandwidth, "Poor"), Some(1.0));
        assert_eq!(f.degree(Criterion::Rss, "Low"), Some(1.0));
        assert_eq!(f.degree(Criterion::Delay, "High"), Some(1.0));
    }

    #[test]
    fn crossover_points_split_evenly() {
        let cfg = FuzzyConfig::default();
        // Midpoints of the Economic/Normal and Poor/Med overlaps.
        let mut v = WLAN.with_priority(Priority::Ordinary);
        v.cost = 0.025;
        v.bandwidth = 1.75;
        let f = fuzzify(&v, &cfg);
        for (c, lo, hi) in [(Criterion::Cost, "Economic", "Normal"), (Criterion::Bandwidth, "Poor", "Med")] {
            assert!((f.degree(c, lo).unwrap() - 0.5).abs() < 1e-12);
            assert!((f.degree(c, hi).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_universe_inputs_clamp() {
        let cfg = FuzzyConfig::default();
        let mut v = UMTS.with_priority(Priority::Ordinary);
        v.rss = -140.0;
        v.delay = 90.0;
        let f = fuzzify(&v, &cfg);
        assert_eq!(f.clamped, vec![Criterion::Rss, Criterion::Delay]);
        assert_eq!(f.degree(Criterion::Rss, "Low"), Some(1.0));
        assert_eq!(f.degree(Criterion::Delay, "High"), Some(1.0));
    }

    #[test]
    fn reference_rows_score_against_hand_sums() {
        let cfg = FuzzyConfig::default();
        let [wc, wb, wr, wu, wd] = REFERENCE_WEIGHTS.0;
        let total = wc + wb + wr + wu + wd;
        // Insensitive user: WLAN gets utility 1 everywhere, UMTS 0 everywhere.
        let wlan = score_network(&WLAN.with_priority(Priority::Insensitive), RatKind::Wlan80211, &cfg).unwrap();
        let umts = score_network(&UMTS.with_priority(Priority::Insensitive), RatKind::Umts, &cfg).unwrap();
        assert_eq!(wlan, 1.0);
        assert_eq!(umts, 0.0);
        // High-QoS user: only the priority term flips.
        let wlan = score_network(&WLAN.with_priority(Priority::HighQoS), RatKind::Wlan80211, &cfg).unwrap();
        let umts = score_network(&UMTS.with_priority(Priority::HighQoS), RatKind::Umts, &cfg).unwrap();
        assert!((wlan - (wc + wb + wr + wd) / total).abs() < 1e-12);
        assert!((umts - wu / total).abs() < 1e-12);
        assert!(umts < wlan);
    }

    #[test]
    fn zero_weights_are_rejected() {
        let cfg = FuzzyConfig { weights: Weights([0.0; 5]), ..FuzzyConfig::default() };
        let err = score_network(&WLAN.with_priority(Priority::Ordinary), RatKind::Wlan80211, &cfg);
        assert_eq!(err, Err(FuzzyError::ZeroWeights));
        assert!(cfg.problems().iter().any(|(p, _)| p == "weights"));
    }

    #[test]
    fn delay_only_weights_prefer_lower_delay() {
        let cfg = FuzzyConfig { weights: Weights([0.0, 0.0, 0.0, 0.0, 1.0]), ..FuzzyConfig::default() };
        let fast = WLAN.with_priority(Priority::Ordinary);
        let mut slow = fast;
        slow.delay = 13.0;
        let s_fast = score_network(&fast, RatKind::Lte, &cfg).unwrap();
        let s_slow = score_network(&slow, RatKind::Lte, &cfg).unwrap();
        assert!(s_fast > s_slow);
    }

    #[test]
    fn identical_candidates_score_identically() {
        let cfg = FuzzyConfig::default();
        let v = CriteriaVector { cost: 0.05, bandwidth: 3.3, rss: -75.0, priority: Priority::Ordinary, delay: 9.0 };
        let a = score_network(&v, RatKind::Lte, &cfg).unwrap();
        let b = score_network(&v, RatKind::Lte, &cfg).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    fn cand(id: &str, rat: RatKind, c: NetworkCriteria) -> Candidate {
        Candidate { id: id.into(), rat, criteria: c.with_priority(Priority::Ordinary) }
    }

    #[test]
    fn ranking_orders_and_breaks_ties() {
        let cfg = FuzzyConfig::default();
        assert!(matches!(rank_networks(&[], &cfg), Err(FuzzyError::EmptyCandidates)));

        let single = rank_networks(&[cand("x", RatKind::Lte, UMTS)], &cfg).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].id, "x");

        let ranked = rank_networks(&[cand("umts", RatKind::Umts, UMTS), cand("wlan", RatKind::Wlan80211, WLAN)], &cfg).unwrap();
        assert_eq!(ranked[0].id, "wlan");

        let tied = rank_networks(&[cand("b", RatKind::Lte, UMTS), cand("a", RatKind::Lte, UMTS)], &cfg).unwrap();
        assert_eq!(tied.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn default_config_is_clean() {
        assert!(FuzzyConfig::default().problems().is_empty());
    }

    #[test]
    fn gapped_partition_is_reported() {
        let mut cfg = FuzzyConfig::default();
        cfg.delay.sets[1].trapezoid = Trapezoid::new(6.0, 8.0, 12.0, 15.0);
        let problems = cfg.problems();
        assert_eq!(problems.len(), 1);
        assert_eq!(problems[0].0, "delay.sets");
    }

    #[test]
    fn unordered_breakpoints_are_reported() {
        let mut cfg = FuzzyConfig::default();
        cfg.rss.sets[0].trapezoid = Trapezoid::new(-110.0, -80.0, -90.0, -70.0);
        assert!(cfg.problems().iter().any(|(p, _)| p == "rss.sets[0].trapezoid"));
    }

    proptest! {
        #[test]
        fn degree_stays_in_unit_interval(
            mut pts in proptest::array::uniform4(-1e3f64..1e3),
            x in -2e3f64..2e3,
        ) {
            pts.sort_by(f64::total_cmp);
            let t = Trapezoid::from(pts);
            let d = t.degree(x);
            prop_assert!((0.0..=1.0).contains(&d));
        }

        #[test]
        fn improving_one_criterion_never_lowers_the_score(
            cost in 0.0f64..0.25, bw in 0.0f64..20.0, rss in -110.0f64..40.0, delay in 0.0f64..25.0,
            step in 0.0f64..1.0, which in 0usize..4, p in 0usize..3,
        ) {
            let cfg = FuzzyConfig::default();
            let v = CriteriaVector { cost, bandwidth: bw, rss, priority: Priority::ALL[p], delay };
            let mut better = v;
            match which {
                0 => better.cost = (cost - step * 0.1).max(0.0),
                1 => better.bandwidth = bw + step * 5.0,
                2 => better.rss = rss + step * 30.0,
                _ => better.delay = (delay - step * 5.0).max(0.0),
            }
            for rat in [RatKind::Lte, RatKind::Umts, RatKind::Wlan80211] {
                let before = score_network(&v, rat, &cfg).unwrap();
                let after = score_network(&better, rat, &cfg).unwrap();
                prop_assert!(after >= before - 1e-15, "{after} < {before}");
            }
        }
    }
}
