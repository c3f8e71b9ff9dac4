//! Scenario documents: parsing, validation and parameter overrides.
//!
//! A scenario is a JSON object with the top-level keys `name`, `sites`,
//! `hotspots`, `population`, `mobility`, `fuzzy`, `handover`, `workload`,
//! `signalling`, `duration_epochs` and `seed`. Unknown keys are rejected at
//! every level. Coverage is topological: a hotspot pairs one WLAN cell with the
//! cellular cell that overlays it, and users are anchored to one hotspot.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::{Criterion, FuzzyConfig, NetworkCriteria, Priority};
use crate::jrrm::HysteresisConfig;
use crate::mobility::MobilityParams;

/// The shipped 5-site / 15-cell cluster.
pub const CLUSTER5X15: &str = include_str!("../../../scenarios/cluster5x15.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RatKind {
    Lte,
    Umts,
    Wlan80211,
}

impl RatKind {
    pub const ALL: [RatKind; 3] = [RatKind::Lte, RatKind::Umts, RatKind::Wlan80211];

    pub fn is_cellular(self) -> bool {
        !matches!(self, RatKind::Wlan80211)
    }

    pub fn name(self) -> &'static str {
        match self {
            RatKind::Lte => "Lte",
            RatKind::Umts => "Umts",
            RatKind::Wlan80211 => "Wlan80211",
        }
    }
}

impl fmt::Display for RatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub id: String,
    pub rat: RatKind,
    pub capacity_sessions: u32,
    pub criteria: NetworkCriteria,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Site {
    pub id: String,
    pub cells: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hotspot {
    pub id: String,
    pub wlan_cell: String,
    pub overlay_cell: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub num_users: u32,
    pub p_vehicular: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorityMix {
    #[serde(rename = "Insensitive")]
    pub insensitive: f64,
    #[serde(rename = "Ordinary")]
    pub ordinary: f64,
    #[serde(rename = "HighQoS")]
    pub high_qos: f64,
}

impl PriorityMix {
    pub fn weights(&self) -> [f64; 3] {
        [self.insensitive, self.ordinary, self.high_qos]
    }

    /// Inverse-CDF pick from a uniform draw in `[0, 1)`.
    pub fn pick(&self, draw: f64) -> Priority {
        if draw < self.insensitive {
            Priority::Insensitive
        } else if draw < self.insensitive + self.ordinary {
            Priority::Ordinary
        } else {
            Priority::HighQoS
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub arrival_rate_per_user_per_epoch: f64,
    pub mean_session_epochs: f64,
    pub p_realtime: f64,
    pub priority_mix: PriorityMix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignallingCostModel {
    pub cost_ho_attempt: f64,
    pub cost_ho_complete: f64,
    pub cost_admit: f64,
}

/// How discretionary handover decisions interact with the simulated state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationMode {
    /// Attempts are executed and change the network state.
    #[default]
    ClosedLoop,
    /// Attempts are evaluated, capacity-checked and charged but never
    /// executed, so the score/dwell trace does not depend on the hysteresis.
    ReplayedTrace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandoverSettings {
    pub score_margin: f64,
    pub min_dwell_epochs: u32,
    /// `true`: predicted stay → WLAN, predicted leave → LTE. `false` swaps the
    /// two prediction branches.
    #[serde(default = "yes")]
    pub table2_semantics: bool,
    #[serde(default)]
    pub mode: EvaluationMode,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub presets: BTreeMap<String, HysteresisConfig>,
}

fn yes() -> bool {
    true
}

impl HandoverSettings {
    pub fn hysteresis(&self) -> HysteresisConfig {
        HysteresisConfig { score_margin: self.score_margin, min_dwell_epochs: self.min_dwell_epochs }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub sites: Vec<Site>,
    pub hotspots: Vec<Hotspot>,
    pub population: PopulationSpec,
    pub mobility: MobilityParams,
    pub fuzzy: FuzzyConfig,
    pub handover: HandoverSettings,
    pub workload: WorkloadSpec,
    pub signalling: SignallingCostModel,
    pub duration_epochs: u64,
    pub seed: u64,
}

/// One broken invariant, addressed by its field path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("{} violation(s): {}", .0.len(), join(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown hysteresis preset {0:?}")]
    UnknownPreset(String),
    #[error("unknown parameter path {0:?}")]
    UnknownParameter(String),
    #[error("parameter {0:?} is not numeric")]
    NonNumericParameter(String),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// Deserializes without checking invariants.
pub fn from_json_unchecked(text: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        match inner.classify() {
            serde_json::error::Category::Syntax | serde_json::error::Category::Eof => ScenarioError::Syntax {
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            },
            _ => ScenarioError::Schema { path, message: inner.to_string() },
        }
    })?;
    Ok(scenario)
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario = from_json_unchecked(text)?;
    let violations = validate_scenario(&scenario);
    if violations.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Invalid(violations))
    }
}

fn check_probability(out: &mut Vec<Violation>, path: &str, p: f64) {
    if !(0.0..=1.0).contains(&p) {
        out.push(Violation::new(path, format!("probability must be in [0, 1], got {p}")));
    }
}

fn check_non_negative(out: &mut Vec<Violation>, path: &str, x: f64) {
    if !(x.is_finite() && x >= 0.0) {
        out.push(Violation::new(path, format!("must be a finite value >= 0, got {x}")));
    }
}

/// Every violated invariant; empty iff the scenario is valid.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();

    if s.duration_epochs < 1 {
        out.push(Violation::new("duration_epochs", "must be >= 1"));
    }
    if s.sites.is_empty() {
        out.push(Violation::new("sites", "at least one site required"));
    }

    let mut site_ids = BTreeSet::new();
    let mut cells: HashMap<&str, &Cell> = HashMap::new();
    for (i, site) in s.sites.iter().enumerate() {
        if !site_ids.insert(site.id.as_str()) {
            out.push(Violation::new(format!("sites[{i}].id"), format!("duplicate site id {:?}", site.id)));
        }
        if site.cells.is_empty() {
            out.push(Violation::new(format!("sites[{i}].cells"), "at least one cell required"));
        }
        for (j, cell) in site.cells.iter().enumerate() {
            let path = format!("sites[{i}].cells[{j}]");
            if cells.insert(cell.id.as_str(), cell).is_some() {
                out.push(Violation::new(format!("{path}.id"), format!("duplicate cell id {:?}", cell.id)));
            }
            let v = cell.criteria;
            for (c, x) in [
                (Criterion::Cost, v.cost),
                (Criterion::Bandwidth, v.bandwidth),
                (Criterion::Rss, v.rss),
                (Criterion::Delay, v.delay),
            ] {
                let [lo, hi] = s.fuzzy.sets(c).expect("numeric criterion").universe;
                if !(x >= lo && x <= hi) {
                    out.push(Violation::new(
                        format!("{path}.criteria.{}", c.key()),
                        format!("{x} outside the universe [{lo}, {hi}]"),
                    ));
                }
            }
        }
    }

    if s.hotspots.is_empty() {
        out.push(Violation::new("hotspots", "at least one hotspot required"));
    }
    let mut hotspot_ids = BTreeSet::new();
    let mut wlan_owner: HashMap<&str, &str> = HashMap::new();
    for (i, h) in s.hotspots.iter().enumerate() {
        let path = format!("hotspots[{i}]");
        if !hotspot_ids.insert(h.id.as_str()) {
            out.push(Violation::new(format!("{path}.id"), format!("duplicate hotspot id {:?}", h.id)));
        }
        match cells.get(h.wlan_cell.as_str()) {
            None => out.push(Violation::new(format!("{path}.wlan_cell"), format!("unknown cell {:?}", h.wlan_cell))),
            Some(c) if c.rat != RatKind::Wlan80211 => out.push(Violation::new(
                format!("{path}.wlan_cell"),
                format!("cell {:?} is {}, expected Wlan80211", c.id, c.rat),
            )),
            Some(_) => {
                if let Some(other) = wlan_owner.insert(h.wlan_cell.as_str(), h.id.as_str()) {
                    out.push(Violation::new(
                        format!("{path}.wlan_cell"),
                        format!("cell {:?} already belongs to hotspot {other:?}", h.wlan_cell),
                    ));
                }
            }
        }
        match cells.get(h.overlay_cell.as_str()) {
            None => out.push(Violation::new(
                format!("{path}.overlay_cell"),
                format!("unknown cell {:?}", h.overlay_cell),
            )),
            Some(c) if !c.rat.is_cellular() => out.push(Violation::new(
                format!("{path}.overlay_cell"),
                format!("cell {:?} is {}, expected Lte or Umts", c.id, c.rat),
            )),
            Some(_) => {}
        }
    }

    if s.population.num_users < 1 {
        out.push(Violation::new("population.num_users", "must be >= 1"));
    }
    check_probability(&mut out, "population.p_vehicular", s.population.p_vehicular);

    check_probability(&mut out, "mobility.p_exit", s.mobility.p_exit);
    check_probability(&mut out, "mobility.p_enter", s.mobility.p_enter);
    if !(s.mobility.vehicular_multiplier.is_finite() && s.mobility.vehicular_multiplier >= 1.0) {
        out.push(Violation::new(
            "mobility.vehicular_multiplier",
            format!("must be >= 1, got {}", s.mobility.vehicular_multiplier),
        ));
    }

    for (path, message) in s.fuzzy.problems() {
        out.push(Violation::new(format!("fuzzy.{path}"), message));
    }

    check_non_negative(&mut out, "handover.score_margin", s.handover.score_margin);
    for (name, preset) in &s.handover.presets {
        check_non_negative(&mut out, &format!("handover.presets.{name}.score_margin"), preset.score_margin);
    }

    let w = &s.workload;
    check_non_negative(&mut out, "workload.arrival_rate_per_user_per_epoch", w.arrival_rate_per_user_per_epoch);
    if !(w.mean_session_epochs.is_finite() && w.mean_session_epochs >= 1.0) {
        out.push(Violation::new(
            "workload.mean_session_epochs",
            format!("must be >= 1 epoch, got {}", w.mean_session_epochs),
        ));
    }
    check_probability(&mut out, "workload.p_realtime", w.p_realtime);
    let mix = w.priority_mix.weights();
    if mix.iter().any(|p| !(0.0..=1.0).contains(p)) || (mix.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        out.push(Violation::new(
            "workload.priority_mix",
            format!("weights must be in [0, 1] and sum to 1, got {mix:?}"),
        ));
    }

    check_non_negative(&mut out, "signalling.cost_ho_attempt", s.signalling.cost_ho_attempt);
    check_non_negative(&mut out, "signalling.cost_ho_complete", s.signalling.cost_ho_complete);
    check_non_negative(&mut out, "signalling.cost_admit", s.signalling.cost_admit);

    out
}

impl Scenario {
    /// The shipped 5-site / 15-cell cluster.
    pub fn cluster5x15() -> Scenario {
        parse_scenario(CLUSTER5X15).expect("shipped scenario is valid")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn num_cells(&self) -> usize {
        self.sites.iter().map(|s| s.cells.len()).sum()
    }

    pub fn cells(&self) -> impl Iterator<Item = (&Site, &Cell)> {
        self.sites.iter().flat_map(|s| s.cells.iter().map(move |c| (s, c)))
    }

    /// A copy with the named hysteresis preset applied.
    pub fn with_preset(&self, name: &str) -> Result<Scenario, ScenarioError> {
        let preset = self
            .handover
            .presets
            .get(name)
            .ok_or_else(|| ScenarioError::UnknownPreset(name.to_string()))?;
        let mut s = self.clone();
        s.handover.score_margin = preset.score_margin;
        s.handover.min_dwell_epochs = preset.min_dwell_epochs;
        Ok(s)
    }

    /// A copy with the numeric field at dotted `path` (e.g.
    /// `handover.score_margin`, `sites.0.cells.2.capacity_sessions`) set to
    /// `value`, re-validated.
    pub fn with_param(&self, path: &str, value: f64) -> Result<Scenario, ScenarioError> {
        let mut doc = serde_json::to_value(self).expect("scenario serializes");
        let pointer = format!("/{}", path.replace('.', "/"));
        let slot = doc
            .pointer_mut(&pointer)
            .filter(|_| !path.is_empty())
            .ok_or_else(|| ScenarioError::UnknownParameter(path.to_string()))?;
        let replacement = match &*slot {
            serde_json::Value::Number(n) if n.is_u64() || n.is_i64() => {
                if value.fract() != 0.0 || value < 0.0 || !value.is_finite() {
                    return Err(ScenarioError::Schema {
                        path: path.to_string(),
                        message: format!("integer field cannot take {value}"),
                    });
                }
                serde_json::Value::from(value as u64)
            }
            serde_json::Value::Number(_) => serde_json::Number::from_f64(value)
                .map(serde_json::Value::Number)
                .ok_or_else(|| ScenarioError::Schema { path: path.to_string(), message: format!("{value} is not finite") })?,
            _ => return Err(ScenarioError::NonNumericParameter(path.to_string())),
        };
        *slot = replacement;
        let s: Scenario = serde_json::from_value(doc)
            .map_err(|e| ScenarioError::Schema { path: path.to_string(), message: e.to_string() })?;
        let violations = validate_scenario(&s);
        if violations.is_empty() {
            Ok(s)
        } else {
            Err(ScenarioError::Invalid(violations))
        }
    }
}
