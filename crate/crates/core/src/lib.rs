//! Tangle DAG data structure, tip selection algorithms, and a deterministic
//! discrete-event simulator for measuring their security and stability under
//! honest and adversarial workloads.
//!
//! The three selectors:
//!
//! * **uniform** — both parents uniform over the raw tips; fast and stable
//!   but trivially gamed by an attacker;
//! * **biased walk** (`Mcmc`) — parents found by random walks favoring heavy
//!   children, parameterized by `alpha`;
//! * **two-step** — conflicts are first resolved deterministically in favor
//!   of the heaviest conflicting site ([`resolve_conflicts`]), then parents
//!   are dispatched uniformly over the resulting conflict-free tip set.
//!
//! [`sim::run`] drives any of them through a seeded workload, optionally
//! against a parasite-chain double-spend adversary, and [`metrics`] turns
//! the traces into the reported measurements.
//!
//! ```
//! use tanglesim_core::metrics::{MetricsParams, MetricsReport};
//! use tanglesim_core::sim::{run, AttackConfig, SimConfig};
//! use tanglesim_core::TsaKind;
//!
//! let config = SimConfig {
//!     duration: 40.0,
//!     tsa: TsaKind::TwoStep,
//!     attack: Some(AttackConfig::default()),
//!     ..SimConfig::default()
//! };
//! let trace = run(&config).unwrap();
//! let report = MetricsReport::compute(&trace, &MetricsParams::default());
//! assert!(report.attack_success.is_some());
//! assert!((0.0..=1.0).contains(&report.parasite_attachment_fraction.unwrap()));
//! assert_eq!(run(&config).unwrap(), trace); // same seed, same run
//! ```

mod bitset;
pub mod metrics;
pub mod oracle;
pub mod sim;
mod tangle;
pub mod testgen;
mod tsa;

pub use tangle::{
    directly_conflicts, CumulativeWeight, Issuer, Site, SiteId, SpendKey, SpendLabel, Tangle,
    TangleError, View,
};
pub use tsa::{
    resolve_conflicts, select_mcmc, select_uniform, transition_distribution, ConflictRecord,
    ParentPair, TsaError, TsaKind, TwoStepState, MAX_REDRAWS,
};
