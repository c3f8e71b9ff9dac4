//! # hetnetsim
//!
//! A deterministic discrete-event simulator of a heterogeneous access network
//! (LTE/UMTS macro cells overlaid with IEEE 802.11 hotspots) driven by a joint
//! radio resource management (JRRM) pipeline:
//!
//! - [`mobility`]: two-region Markov user mobility, its equilibrium and a
//!   history-based location predictor
//! - [`fuzzy`]: trapezoidal fuzzification of (cost, bandwidth, RSS, priority,
//!   delay) and weighted network scoring
//! - [`jrrm`]: rule-based RAT selection, WLAN admission with cellular fallback,
//!   and hysteresis-gated vertical handover
//! - [`engine`]: the epoch-driven event loop, KPI accounting and sweeps
//! - [`kpi`]: KPI report and event log types, offline KPI recomputation
//! - [`scenario`]: the declarative scenario document and its validation
//!
//! ```
//! use hetnetsim::{engine, scenario};
//!
//! let text = include_str!("../../../scenarios/cluster5x15.json");
//! let mut s = scenario::parse_scenario(text).unwrap();
//! s.duration_epochs = 50;
//! let out = engine::run(&s).unwrap();
//! assert!(out.report.ho_successes <= out.report.ho_attempts);
//! ```

pub mod engine;
pub mod fuzzy;
pub mod jrrm;
pub mod kpi;
pub mod mobility;
pub mod rng;
pub mod scenario;

pub use engine::{run, sweep, RunOutput, Simulation, SimError};
pub use kpi::{collect_kpis, EventLog, KpiReport};
pub use scenario::{parse_scenario, validate_scenario, Scenario};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/mobility.md")]
    mod mobility {}
    #[doc = include_str!("../../../book/src/fuzzy.md")]
    mod fuzzy {}
    #[doc = include_str!("../../../book/src/jrrm.md")]
    mod jrrm {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
