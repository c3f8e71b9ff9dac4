//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::io::Write;
use std::path::PathBuf;

use hetnetsim::fuzzy::{FuzzyConfig, NetworkCriteria};
use hetnetsim::jrrm::HysteresisConfig;
use hetnetsim::mobility::MobilityParams;
use hetnetsim::scenario::{
    Cell, EvaluationMode, HandoverSettings, Hotspot, PopulationSpec, PriorityMix, RatKind, SignallingCostModel, Site,
    WorkloadSpec,
};
use hetnetsim::{validate_scenario, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn workspace_file(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

/// Prints a verdict line that is not swallowed by the test harness.
pub fn verdict(criterion: u32, name: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "ACCEPTANCE {criterion} {name}: {status} ({detail})");
}

/// A random valid scenario with at most `max_cells` cells and `max_users`
/// users, running for `duration` epochs.
pub fn random_scenario(seed: u64, max_cells: usize, max_users: u32, duration: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = FuzzyConfig::default();
    let criteria = |rng: &mut ChaCha8Rng| NetworkCriteria {
        cost: rng.gen_range(cfg.cost.universe[0]..=cfg.cost.universe[1]),
        bandwidth: rng.gen_range(cfg.bandwidth.universe[0]..=cfg.bandwidth.universe[1]),
        rss: rng.gen_range(cfg.rss.universe[0]..=cfg.rss.universe[1]),
        delay: rng.gen_range(cfg.delay.universe[0]..=cfg.delay.universe[1]),
    };

    let max_sites = (max_cells / 2).max(1);
    let n_sites = rng.gen_range(1..=max_sites.min(10));
    let wlan_budget = max_cells - n_sites;
    let mut sites = Vec::new();
    let mut hotspots = Vec::new();
    let mut wlans_left = wlan_budget;
    for s in 0..n_sites {
        let site_id = format!("s{s}");
        let overlay_id = format!("{site_id}-macro");
        let rat = if rng.gen_bool(0.5) { RatKind::Lte } else { RatKind::Umts };
        let mut cells = vec![Cell { id: overlay_id.clone(), rat, capacity_sessions: rng.gen_range(0..=40), criteria: criteria(&mut rng) }];
        let share = wlans_left / (n_sites - s);
        let n_wlan = if s == 0 { rng.gen_range(1..=share.max(1)) } else { rng.gen_range(0..=share) };
        wlans_left -= n_wlan;
        for w in 0..n_wlan {
            let id = format!("{site_id}-w{w}");
            cells.push(Cell { id: id.clone(), rat: RatKind::Wlan80211, capacity_sessions: rng.gen_range(0..=6), criteria: criteria(&mut rng) });
            hotspots.push(Hotspot { id: format!("{id}-hs"), wlan_cell: id, overlay_cell: overlay_id.clone() });
        }
        sites.push(Site { id: site_id, cells });
    }

    let a: f64 = rng.gen();
    let b: f64 = rng.gen::<f64>() * (1.0 - a);
    let mut presets = std::collections::BTreeMap::new();
    presets.insert("hardened".to_string(), HysteresisConfig { score_margin: 0.15, min_dwell_epochs: 5 });
    let s = Scenario {
        name: format!("random-{seed}"),
        sites,
        hotspots,
        population: PopulationSpec { num_users: rng.gen_range(1..=max_users), p_vehicular: rng.gen() },
        mobility: MobilityParams {
            p_exit: rng.gen(),
            p_enter: rng.gen(),
            vehicular_multiplier: rng.gen_range(1.0..6.0),
        },
        fuzzy: cfg.clone(),
        handover: HandoverSettings {
            score_margin: rng.gen_range(0.0..0.4),
            min_dwell_epochs: rng.gen_range(0..8),
            table2_semantics: rng.gen_bool(0.7),
            mode: if rng.gen_bool(0.3) { EvaluationMode::ReplayedTrace } else { EvaluationMode::ClosedLoop },
            presets,
        },
        workload: WorkloadSpec {
            arrival_rate_per_user_per_epoch: rng.gen_range(0.0..0.2),
            mean_session_epochs: rng.gen_range(1.0..30.0),
            p_realtime: rng.gen(),
            priority_mix: PriorityMix { insensitive: a, ordinary: b, high_qos: 1.0 - a - b },
        },
        signalling: SignallingCostModel {
            cost_ho_attempt: rng.gen_range(0.0..3.0),
            cost_ho_complete: rng.gen_range(0.0..2.0),
            cost_admit: rng.gen_range(0.0..1.0),
        },
        duration_epochs: duration,
        seed: rng.gen(),
    };
    let violations = validate_scenario(&s);
    assert!(violations.is_empty(), "generator produced an invalid scenario: {violations:?}");
    s
}
