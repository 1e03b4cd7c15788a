//! Tip selection algorithms: uniform over raw tips, weight-biased random
//! walks, and the two-step selector (conflict resolution first, then
//! uniform dispatch over the conflict-free tip set).

mod mcmc;
mod two_step;
mod uniform;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tangle::{SiteId, View};

pub use mcmc::{select_mcmc, transition_distribution};
pub use two_step::{resolve_conflicts, ConflictRecord, TwoStepState};
pub use uniform::select_uniform;

/// How many conflicting draws a randomized selector tolerates before it
/// falls back to the deterministic smallest conflict-free pair.
pub const MAX_REDRAWS: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TsaError {
    #[error("site {0} has no children")]
    NoChildren(SiteId),
    #[error("tip set is empty")]
    EmptyTipSet,
    #[error("chosen parents are not current tips")]
    ParentsNotInTips,
    #[error("site {0} is not in the tangle")]
    SiteNotInTangle(SiteId),
}

/// Which selector a node runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TsaKind {
    Uniform,
    Mcmc { alpha: f64 },
    TwoStep,
}

impl TsaKind {
    pub fn alpha(&self) -> Option<f64> {
        match self {
            TsaKind::Mcmc { alpha } => Some(*alpha),
            _ => None,
        }
    }
}

/// The two parents chosen for a new site. Selectors that draw ordered pairs
/// preserve the draw order; the dispatcher normalizes to id order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParentPair {
    pub p1: SiteId,
    pub p2: SiteId,
}

impl ParentPair {
    pub fn new(p1: SiteId, p2: SiteId) -> Self {
        ParentPair { p1, p2 }
    }

    pub fn as_tuple(&self) -> (SiteId, SiteId) {
        (self.p1.clone(), self.p2.clone())
    }
}

/// Smallest conflict-free pair of view tips in id order. Total: a tip paired
/// with itself never conflicts, because stored past cones are conflict-free.
fn fallback_pair(view: &View<'_>, tips: &[u32]) -> ParentPair {
    let tangle = view.tangle();
    for (n, &a) in tips.iter().enumerate() {
        for &b in &tips[n..] {
            if !tangle.induced_conflicts_idx(a, b) {
                return ParentPair::new(tangle.id_at(a).clone(), tangle.id_at(b).clone());
            }
        }
    }
    unreachable!("a tip paired with itself is always conflict-free");
}
