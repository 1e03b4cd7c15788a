//! Deterministic discrete-event simulation of honest nodes issuing sites
//! under propagation latency, with an optional parasite-chain double-spend
//! adversary.
//!
//! Honest issuance is one aggregate Poisson process; issuer attribution
//! round-robins over the configured node count. Every run is a pure function
//! of its config (seed included): the trace is reproducible byte for byte.

mod runner;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tangle::{SiteId, SpendKey, Tangle};
use crate::tsa::TsaKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    ConfigInvalid(String),
    #[error("tangle has no conflicting spend pair")]
    MissingConflict,
}

/// Where parasite sites anchor in the public tangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnchorPolicy {
    /// First parent of the target transaction (a pre-attack site).
    TargetParent,
    Genesis,
}

/// Double-spend attack parameters. The adversary issues the target
/// transaction publicly at t = 0, builds a private chain on a conflicting
/// transaction at `adversary_rate`, reveals everything once the target's
/// public cumulative weight reaches `accept_weight` (or at `reveal_at` when
/// set), and the outcome is recorded `eval_horizon` seconds after reveal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub adversary_rate: f64,
    pub accept_weight: u64,
    pub anchor_policy: AnchorPolicy,
    pub eval_horizon: f64,
    /// Optional time-based reveal trigger overriding the weight trigger.
    pub reveal_at: Option<f64>,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            adversary_rate: 2.5,
            accept_weight: 8,
            anchor_policy: AnchorPolicy::TargetParent,
            eval_horizon: 30.0,
            reveal_at: None,
        }
    }
}

/// Experiment parameters for one simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Aggregate honest issuance rate (sites per second).
    pub honest_rate: f64,
    /// Propagation latency in seconds.
    pub latency: f64,
    /// Honest issuance stops at this time; delivery and evaluation events
    /// may run past it.
    pub duration: f64,
    pub tsa: TsaKind,
    pub seed: u64,
    /// Issuer attribution only: arrivals round-robin over this many nodes.
    pub node_count: u32,
    pub attack: Option<AttackConfig>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            honest_rate: 5.0,
            latency: 1.0,
            duration: 1000.0,
            tsa: TsaKind::TwoStep,
            seed: 0,
            node_count: 25,
            attack: None,
        }
    }
}

impl SimConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !self.honest_rate.is_finite() || self.honest_rate <= 0.0 {
            return Err(SimError::ConfigInvalid(
                "honest rate must be positive".into(),
            ));
        }
        if !self.latency.is_finite() || self.latency < 0.0 {
            return Err(SimError::ConfigInvalid(
                "latency must be nonnegative".into(),
            ));
        }
        if !self.duration.is_finite() || self.duration <= 0.0 {
            return Err(SimError::ConfigInvalid("duration must be positive".into()));
        }
        if self.node_count == 0 {
            return Err(SimError::ConfigInvalid(
                "node count must be positive".into(),
            ));
        }
        if let TsaKind::Mcmc { alpha } = self.tsa {
            if !alpha.is_finite() || alpha < 0.0 {
                return Err(SimError::ConfigInvalid("alpha must be nonnegative".into()));
            }
        }
        if let Some(attack) = &self.attack {
            if !attack.adversary_rate.is_finite() || attack.adversary_rate <= 0.0 {
                return Err(SimError::ConfigInvalid(
                    "adversary rate must be positive".into(),
                ));
            }
            if attack.accept_weight < 1 {
                return Err(SimError::ConfigInvalid(
                    "accept weight must be at least 1".into(),
                ));
            }
            if !attack.eval_horizon.is_finite() || attack.eval_horizon < 0.0 {
                return Err(SimError::ConfigInvalid(
                    "eval horizon must be nonnegative".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    HonestIssue,
    AdversaryIssue,
    Deliver,
    Reveal,
    Evaluate,
}

/// One processed event with the resulting global raw-tip count and, for
/// two-step runs, the observer node's conflict-free tip set size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub time: f64,
    pub kind: EventKind,
    pub site: Option<SiteId>,
    pub raw_tip_count: u32,
    pub tip_set_size: Option<u32>,
}

/// Identities of the attack's fixed sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackIds {
    pub key: SpendKey,
    /// The public transaction the merchant waits on.
    pub target: SiteId,
    /// The conflicting private transaction.
    pub double_spend: SiteId,
    pub anchor: SiteId,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    /// True iff the conflict resolution winner at evaluation time was the
    /// double-spend transaction.
    pub success: bool,
    pub target_weight: u64,
    pub double_spend_weight: u64,
}

/// Timestamped event log plus the final tangle of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub config: SimConfig,
    pub entries: Vec<TraceEntry>,
    pub tangle: Tangle,
    pub attack: Option<AttackIds>,
    pub reveal_time: Option<f64>,
    pub outcome: Option<AttackOutcome>,
    /// For two-step attack runs: whether any honest selection instant had
    /// the double-spend side winning in the issuer's view.
    pub parasite_ever_preferred: Option<bool>,
}

/// Poisson arrival times over `[0, duration)`: exponential inter-arrival
/// gaps with mean `1/rate`, ascending, deterministic per rng stream.
pub fn sample_arrivals<R: Rng + ?Sized>(rate: f64, duration: f64, rng: &mut R) -> Vec<f64> {
    assert!(rate > 0.0, "arrival rate must be positive");
    let mut times = Vec::new();
    let mut t = 0.0;
    loop {
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / rate;
        if t >= duration {
            return times;
        }
        times.push(t);
    }
}

/// Resolve the double-spend conflict on the current tangle: the first spend
/// key with at least two members is the attack key, its first-issued member
/// the target. The attack succeeded iff the (weight, then smaller id) winner
/// is not the target.
pub fn attack_outcome(tangle: &Tangle) -> Result<AttackOutcome, SimError> {
    for key in tangle.spend_keys() {
        let members = tangle.key_members(key);
        if members.len() < 2 {
            continue;
        }
        let weights: Vec<u64> = members
            .iter()
            .map(|id| tangle.cumulative_weight(id).unwrap().get())
            .collect();
        let winner = (0..members.len())
            .max_by(|&a, &b| {
                weights[a]
                    .cmp(&weights[b])
                    .then_with(|| members[b].cmp(&members[a]))
            })
            .unwrap();
        return Ok(AttackOutcome {
            success: winner != 0,
            target_weight: weights[0],
            double_spend_weight: weights[1],
        });
    }
    Err(SimError::MissingConflict)
}

pub use runner::run;
