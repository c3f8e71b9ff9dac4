//! KPI reports and the event log.
//!
//! The event log is complete enough to rebuild every KPI without the
//! simulator: [`collect_kpis`] replays it against the scenario's topology and
//! must agree field-for-field with the report produced online by
//! [`crate::engine::run`].
//!
//! CSV columns: `epoch, sequence, kind, user_id, session_id, from_cell,
//! to_cell, outcome, signalling_cost`. Mobility rows carry hotspot ids (empty
//! for "outside") in the cell columns.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jrrm::RatRule;
use crate::scenario::{RatKind, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    SessionArrival,
    SessionEnd,
    MobilityTick,
    HandoverEvaluation,
}

impl EventKind {
    /// Processing priority within an epoch.
    pub fn rank(self) -> u8 {
        match self {
            EventKind::SessionEnd => 0,
            EventKind::MobilityTick => 1,
            EventKind::SessionArrival => 2,
            EventKind::HandoverEvaluation => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// Initial placement inside a hotspot.
    Placed,
    Entered,
    Exited,
    Admitted(RatRule),
    Fallback,
    Blocked(RatRule),
    Completed,
    /// Coverage lost and the forced handover failed.
    Dropped,
    Success,
    Failure,
    ForcedSuccess,
    ForcedFailure,
    /// Open-loop evaluation: counted and charged, not executed.
    ReplaySuccess,
    ReplayFailure,
}

impl Outcome {
    pub fn is_handover_attempt(self) -> bool {
        matches!(
            self,
            Outcome::Success
                | Outcome::Failure
                | Outcome::ForcedSuccess
                | Outcome::ForcedFailure
                | Outcome::ReplaySuccess
                | Outcome::ReplayFailure
        )
    }

    pub fn is_handover_success(self) -> bool {
        matches!(self, Outcome::Success | Outcome::ForcedSuccess | Outcome::ReplaySuccess)
    }

    /// Whether the session actually changed cell.
    pub fn moves_session(self) -> bool {
        matches!(self, Outcome::Success | Outcome::ForcedSuccess)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Placed => f.write_str("placed"),
            Outcome::Entered => f.write_str("entered"),
            Outcome::Exited => f.write_str("exited"),
            Outcome::Admitted(r) => write!(f, "admitted:{}", r.name()),
            Outcome::Fallback => write!(f, "fallback:{}", RatRule::CapacityFallback.name()),
            Outcome::Blocked(r) => write!(f, "blocked:{}", r.name()),
            Outcome::Completed => f.write_str("completed"),
            Outcome::Dropped => f.write_str("dropped"),
            Outcome::Success => f.write_str("success"),
            Outcome::Failure => f.write_str("failure"),
            Outcome::ForcedSuccess => f.write_str("forced_success"),
            Outcome::ForcedFailure => f.write_str("forced_failure"),
            Outcome::ReplaySuccess => f.write_str("replay_success"),
            Outcome::ReplayFailure => f.write_str("replay_failure"),
        }
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let rule = |name: &str| RatRule::from_name(name).ok_or_else(|| format!("unknown rule {name:?}"));
        Ok(match s.split_once(':') {
            Some(("admitted", r)) => Outcome::Admitted(rule(r)?),
            Some(("blocked", r)) => Outcome::Blocked(rule(r)?),
            Some(("fallback", "CapacityFallback")) => Outcome::Fallback,
            Some(_) => return Err(format!("unknown outcome {s:?}")),
            None => match s {
                "placed" => Outcome::Placed,
                "entered" => Outcome::Entered,
                "exited" => Outcome::Exited,
                "completed" => Outcome::Completed,
                "dropped" => Outcome::Dropped,
                "success" => Outcome::Success,
                "failure" => Outcome::Failure,
                "forced_success" => Outcome::ForcedSuccess,
                "forced_failure" => Outcome::ForcedFailure,
                "replay_success" => Outcome::ReplaySuccess,
                "replay_failure" => Outcome::ReplayFailure,
                _ => return Err(format!("unknown outcome {s:?}")),
            },
        })
    }
}

impl Serialize for Outcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One row of the event log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub epoch: u64,
    pub sequence: u64,
    pub kind: EventKind,
    pub user_id: u32,
    pub session_id: Option<u64>,
    pub from_cell: String,
    pub to_cell: String,
    pub outcome: Outcome,
    pub signalling_cost: f64,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Rows in processing order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    pub records: Vec<EventRecord>,
}

const HEADER: [&str; 9] = [
    "epoch",
    "sequence",
    "kind",
    "user_id",
    "session_id",
    "from_cell",
    "to_cell",
    "outcome",
    "signalling_cost",
];

impl EventLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<(), LogError> {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        let csv_err = |e: csv::Error| LogError::Io(io::Error::other(e));
        out.write_record(HEADER).map_err(csv_err)?;
        for r in &self.records {
            out.serialize(r).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn read_csv<R: io::Read>(r: R) -> Result<EventLog, LogError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let headers = rdr.headers().map_err(|e| malformed_csv(&e, 1))?.clone();
        if headers.iter().ne(HEADER) {
            return Err(LogError::Malformed {
                line: 1,
                message: format!("expected header {}", HEADER.join(",")),
            });
        }
        let mut records = Vec::new();
        for (i, row) in rdr.deserialize::<EventRecord>().enumerate() {
            records.push(row.map_err(|e| malformed_csv(&e, i as u64 + 2))?);
        }
        Ok(EventLog { records })
    }
}

fn malformed_csv(e: &csv::Error, fallback_line: u64) -> LogError {
    let line = e.position().map(|p| p.line()).unwrap_or(fallback_line);
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => e.to_string(),
    };
    LogError::Malformed { line, message }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub ho_attempts: u64,
    pub ho_successes: u64,
    /// `ho_successes / ho_attempts`; absent without attempts.
    pub hosr: Option<f64>,
    pub signalling_load_per_site: BTreeMap<String, f64>,
    pub new_call_blocking: f64,
    pub hotspot_occupancy_mean: f64,
    /// Session-epochs carried by each RAT kind.
    pub per_rat_load: BTreeMap<RatKind, u64>,
    pub seed: u64,
}

impl KpiReport {
    pub fn signalling_total(&self) -> f64 {
        self.signalling_load_per_site.values().sum()
    }

    /// Pretty JSON with a trailing newline, as written to `kpi.json`.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn summary(&self) -> String {
        let hosr = self.hosr.map_or_else(|| "n/a".to_string(), |h| format!("{:.4}", h));
        let mut out = String::new();
        out.push_str(&format!("{:<24}{}\n", "seed", self.seed));
        out.push_str(&format!("{:<24}{}\n", "ho_attempts", self.ho_attempts));
        out.push_str(&format!("{:<24}{}\n", "ho_successes", self.ho_successes));
        out.push_str(&format!("{:<24}{}\n", "hosr", hosr));
        out.push_str(&format!("{:<24}{:.4}\n", "new_call_blocking", self.new_call_blocking));
        out.push_str(&format!("{:<24}{:.4}\n", "hotspot_occupancy_mean", self.hotspot_occupancy_mean));
        out.push_str(&format!("{:<24}{:.3}\n", "signalling_total", self.signalling_total()));
        for (site, load) in &self.signalling_load_per_site {
            out.push_str(&format!("  {:<22}{:.3}\n", format!("site {site}"), load));
        }
        for (rat, load) in &self.per_rat_load {
            out.push_str(&format!("  {:<22}{}\n", format!("load {rat}"), load));
        }
        out
    }
}

/// Running KPI counters, fed either by the live simulation or by a log replay.
#[derive(Clone, Debug)]
pub(crate) struct KpiAccumulator {
    attempts: u64,
    successes: u64,
    requests: u64,
    blocked: u64,
    site_ids: Vec<String>,
    signalling: Vec<f64>,
    inside_user_epochs: u64,
    epochs_closed: u64,
    per_rat: BTreeMap<RatKind, u64>,
}

impl KpiAccumulator {
    pub(crate) fn new(scenario: &Scenario) -> Self {
        KpiAccumulator {
            attempts: 0,
            successes: 0,
            requests: 0,
            blocked: 0,
            site_ids: scenario.sites.iter().map(|s| s.id.clone()).collect(),
            signalling: vec![0.0; scenario.sites.len()],
            inside_user_epochs: 0,
            epochs_closed: 0,
            per_rat: RatKind::ALL.iter().map(|r| (*r, 0)).collect(),
        }
    }

    pub(crate) fn handover(&mut self, success: bool) {
        self.attempts += 1;
        self.successes += success as u64;
    }

    pub(crate) fn request(&mut self, blocked: bool) {
        self.requests += 1;
        self.blocked += blocked as u64;
    }

    /// Adds `cost` to the site at index `site` in scenario order.
    pub(crate) fn charge(&mut self, site: usize, cost: f64) {
        self.signalling[site] += cost;
    }

    pub(crate) fn close_epoch(&mut self, inside_users: u64, per_rat: [u64; 3]) {
        self.inside_user_epochs += inside_users;
        self.epochs_closed += 1;
        for (rat, n) in RatKind::ALL.iter().zip(per_rat) {
            *self.per_rat.get_mut(rat).expect("all kinds") += n;
        }
    }

    pub(crate) fn epochs_closed(&self) -> u64 {
        self.epochs_closed
    }

    pub(crate) fn finish(self, scenario: &Scenario) -> KpiReport {
        let user_epochs = scenario.population.num_users as u64 * self.epochs_closed;
        KpiReport {
            ho_attempts: self.attempts,
            ho_successes: self.successes,
            hosr: (self.attempts > 0).then(|| self.successes as f64 / self.attempts as f64),
            signalling_load_per_site: self.site_ids.into_iter().zip(self.signalling).collect(),
            new_call_blocking: if self.requests > 0 { self.blocked as f64 / self.requests as f64 } else { 0.0 },
            hotspot_occupancy_mean: if user_epochs > 0 {
                self.inside_user_epochs as f64 / user_epochs as f64
            } else {
                0.0
            },
            per_rat_load: self.per_rat,
            seed: scenario.seed,
        }
    }
}

pub(crate) fn rat_slot(rat: RatKind) -> usize {
    match rat {
        RatKind::Lte => 0,
        RatKind::Umts => 1,
        RatKind::Wlan80211 => 2,
    }
}

/// Recomputes the KPI report of a run purely from its event log.
pub fn collect_kpis(log: &EventLog, scenario: &Scenario) -> Result<KpiReport, LogError> {
    struct CellMeta {
        site: usize,
        rat: RatKind,
        occupancy: u64,
    }
    let mut cells: HashMap<&str, CellMeta> = scenario
        .sites
        .iter()
        .enumerate()
        .flat_map(|(i, site)| site.cells.iter().map(move |cell| (cell.id.as_str(), CellMeta { site: i, rat: cell.rat, occupancy: 0 })))
        .collect();
    let hotspots: HashMap<&str, ()> = scenario.hotspots.iter().map(|h| (h.id.as_str(), ())).collect();
    let num_users = scenario.population.num_users as usize;
    let mut inside = vec![false; num_users];
    let mut inside_count = 0u64;
    let mut acc = KpiAccumulator::new(scenario);

    let close = |acc: &mut KpiAccumulator, cells: &HashMap<&str, CellMeta>, inside_count: u64| {
        let mut per_rat = [0u64; 3];
        for c in cells.values() {
            per_rat[rat_slot(c.rat)] += c.occupancy;
        }
        acc.close_epoch(inside_count, per_rat);
    };

    let mut last_sequence: Option<u64> = None;
    for (i, r) in log.records.iter().enumerate() {
        let line = i as u64 + 2;
        let bad = |message: String| LogError::Malformed { line, message };
        if r.epoch >= scenario.duration_epochs {
            return Err(bad(format!("epoch {} beyond run length {}", r.epoch, scenario.duration_epochs)));
        }
        if last_sequence.is_some_and(|s| r.sequence <= s) {
            return Err(bad(format!("sequence {} is not increasing", r.sequence)));
        }
        last_sequence = Some(r.sequence);
        if r.epoch < acc.epochs_closed() {
            return Err(bad(format!("epoch {} goes backwards", r.epoch)));
        }
        while acc.epochs_closed() < r.epoch {
            close(&mut acc, &cells, inside_count);
        }
        let user = r.user_id as usize;
        if user >= num_users {
            return Err(bad(format!("unknown user {}", r.user_id)));
        }

        match r.kind {
            EventKind::MobilityTick => {
                let target = match r.outcome {
                    Outcome::Placed | Outcome::Entered => true,
                    Outcome::Exited => false,
                    o => return Err(bad(format!("outcome {o} on a mobility row"))),
                };
                let hotspot = if target { &r.to_cell } else { &r.from_cell };
                if !hotspots.contains_key(hotspot.as_str()) {
                    return Err(bad(format!("unknown hotspot {hotspot:?}")));
                }
                if inside[user] == target {
                    return Err(bad(format!("user {} already in that region", r.user_id)));
                }
                inside[user] = target;
                if target {
                    inside_count += 1;
                } else {
                    inside_count -= 1;
                }
            }
            EventKind::SessionArrival => {
                let blocked = match r.outcome {
                    Outcome::Admitted(_) | Outcome::Fallback => false,
                    Outcome::Blocked(_) => true,
                    o => return Err(bad(format!("outcome {o} on an arrival row"))),
                };
                let cell = cells.get_mut(r.to_cell.as_str()).ok_or_else(|| bad(format!("unknown cell {:?}", r.to_cell)))?;
                if !blocked {
                    cell.occupancy += 1;
                }
                let site = cell.site;
                acc.request(blocked);
                acc.charge(site, r.signalling_cost);
            }
            EventKind::SessionEnd => {
                if !matches!(r.outcome, Outcome::Completed | Outcome::Dropped) {
                    return Err(bad(format!("outcome {} on a session-end row", r.outcome)));
                }
                let cell = cells.get_mut(r.from_cell.as_str()).ok_or_else(|| bad(format!("unknown cell {:?}", r.from_cell)))?;
                if cell.occupancy == 0 {
                    return Err(bad(format!("cell {:?} has no session to end", r.from_cell)));
                }
                cell.occupancy -= 1;
                let site = cell.site;
                acc.charge(site, r.signalling_cost);
            }
            EventKind::HandoverEvaluation => {
                if !r.outcome.is_handover_attempt() {
                    return Err(bad(format!("outcome {} on a handover row", r.outcome)));
                }
                if !cells.contains_key(r.to_cell.as_str()) {
                    return Err(bad(format!("unknown cell {:?}", r.to_cell)));
                }
                let from = cells.get_mut(r.from_cell.as_str()).ok_or_else(|| bad(format!("unknown cell {:?}", r.from_cell)))?;
                let site = from.site;
                if r.outcome.moves_session() {
                    if from.occupancy == 0 {
                        return Err(bad(format!("cell {:?} has no session to hand over", r.from_cell)));
                    }
                    from.occupancy -= 1;
                    cells.get_mut(r.to_cell.as_str()).expect("checked").occupancy += 1;
                }
                acc.handover(r.outcome.is_handover_success());
                acc.charge(site, r.signalling_cost);
            }
        }
    }
    while acc.epochs_closed() < scenario.duration_epochs {
        close(&mut acc, &cells, inside_count);
    }
    Ok(acc.finish(scenario))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario() -> Scenario {
        let mut s = Scenario::cluster5x15();
        s.duration_epochs = 10;
        s
    }

    fn row(epoch: u64, sequence: u64, kind: EventKind, from: &str, to: &str, outcome: Outcome, cost: f64) -> EventRecord {
        EventRecord {
            epoch,
            sequence,
            kind,
            user_id: 0,
            session_id: Some(1),
            from_cell: from.into(),
            to_cell: to.into(),
            outcome,
            signalling_cost: cost,
        }
    }

    #[test]
    fn outcome_strings_round_trip() {
        let all = [
            Outcome::Placed,
            Outcome::Entered,
            Outcome::Exited,
            Outcome::Admitted(RatRule::NonRealTimeWlan),
            Outcome::Fallback,
            Outcome::Blocked(RatRule::OutsideHotspot),
            Outcome::Completed,
            Outcome::Dropped,
            Outcome::Success,
            Outcome::Failure,
            Outcome::ForcedSuccess,
            Outcome::ForcedFailure,
            Outcome::ReplaySuccess,
            Outcome::ReplayFailure,
        ];
        for o in all {
            assert_eq!(o.to_string().parse::<Outcome>(), Ok(o));
        }
        assert!("fallback:OutsideHotspot".parse::<Outcome>().is_err());
        assert!("admitted:Nope".parse::<Outcome>().is_err());
    }

    #[test]
    fn empty_log_gives_zero_counters() {
        let s = scenario();
        let r = collect_kpis(&EventLog::default(), &s).unwrap();
        assert_eq!((r.ho_attempts, r.ho_successes, r.hosr), (0, 0, None));
        assert_eq!(r.new_call_blocking, 0.0);
        assert_eq!(r.signalling_total(), 0.0);
        assert_eq!(r.signalling_load_per_site.len(), 5);
        assert_eq!(r.seed, s.seed);
    }

    #[test]
    fn ten_attempts_nine_successes() {
        let s = scenario();
        let (wlan, lte) = (s.hotspots[0].wlan_cell.clone(), s.hotspots[0].overlay_cell.clone());
        let mut records = vec![row(0, 0, EventKind::SessionArrival, "", &lte, Outcome::Admitted(RatRule::OutsideHotspot), 1.0)];
        for i in 0..10 {
            let outcome = if i < 9 { Outcome::ReplaySuccess } else { Outcome::ReplayFailure };
            records.push(row(i, 1 + i, EventKind::HandoverEvaluation, &lte, &wlan, outcome, 2.0));
        }
        let r = collect_kpis(&EventLog { records }, &s).unwrap();
        assert_eq!((r.ho_attempts, r.ho_successes), (10, 9));
        assert_eq!(r.hosr, Some(0.9));
        assert_eq!(r.signalling_total(), 21.0);
        // One session on the overlay for all ten epochs.
        let overlay_rat = s.cells().find(|(_, c)| c.id == lte).unwrap().1.rat;
        assert_eq!(r.per_rat_load[&overlay_rat], 10);
    }

    #[test]
    fn csv_round_trip_and_header() {
        let s = scenario();
        let lte = s.hotspots[0].overlay_cell.clone();
        let log = EventLog {
            records: vec![
                row(0, 0, EventKind::SessionArrival, "", &lte, Outcome::Admitted(RatRule::OutsideHotspot), 0.1),
                row(3, 1, EventKind::SessionEnd, &lte, "", Outcome::Completed, 0.0),
            ],
        };
        let text = log.to_csv_string();
        assert!(text.starts_with("epoch,sequence,kind,user_id,session_id,from_cell,to_cell,outcome,signalling_cost\n"));
        assert_eq!(EventLog::read_csv(text.as_bytes()).unwrap(), log);
    }

    #[test]
    fn truncated_row_reports_its_line() {
        let s = scenario();
        let lte = &s.hotspots[0].overlay_cell;
        let text = format!(
            "{}\n0,0,SessionArrival,0,1,,{lte},admitted:OutsideHotspot,0.5\n1,1,SessionEnd,0,1\n",
            HEADER.join(",")
        );
        match EventLog::read_csv(text.as_bytes()) {
            Err(LogError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inconsistent_logs_are_rejected() {
        let s = scenario();
        let lte = s.hotspots[0].overlay_cell.clone();
        let end_without_session = EventLog { records: vec![row(0, 0, EventKind::SessionEnd, &lte, "", Outcome::Completed, 0.0)] };
        assert!(matches!(collect_kpis(&end_without_session, &s), Err(LogError::Malformed { line: 2, .. })));
        let unknown_cell = EventLog {
            records: vec![row(0, 0, EventKind::SessionArrival, "", "nowhere", Outcome::Admitted(RatRule::OutsideHotspot), 0.0)],
        };
        assert!(collect_kpis(&unknown_cell, &s).is_err());
        let late = EventLog { records: vec![row(99, 0, EventKind::SessionEnd, &lte, "", Outcome::Completed, 0.0)] };
        assert!(collect_kpis(&late, &s).is_err());
    }
}
