//! Weight-biased random walk selector.
//!
//! A walker starts at the genesis and repeatedly moves to a visible child
//! until it reaches a site with no visible children. The step distribution
//! is `P(x → y) ∝ exp(-alpha (w(x) - w(y)))` over the children of `x`, so
//! `alpha = 0` is an unbiased walk and larger `alpha` concentrates on heavy
//! children.

use rand::Rng;

use super::{fallback_pair, ParentPair, TsaError, MAX_REDRAWS};
use crate::tangle::{SiteId, View};

/// Step distribution from `current` over its visible children, in id order.
/// Probabilities are positive and sum to 1.
pub fn transition_distribution(
    view: &View<'_>,
    current: &SiteId,
    alpha: f64,
) -> Result<Vec<(SiteId, f64)>, TsaError> {
    let tangle = view.tangle();
    let idx = tangle
        .idx_of(current)
        .ok_or_else(|| TsaError::SiteNotInTangle(current.clone()))?;
    let weights =
        child_weights(view, idx, alpha).ok_or_else(|| TsaError::NoChildren(current.clone()))?;
    Ok(weights
        .into_iter()
        .map(|(c, p)| (tangle.id_at(c).clone(), p))
        .collect())
}

/// Normalized child weights `(child, probability)` in id order, or `None`
/// when `current` has no visible child. The common `w(current)` factor
/// cancels, and shifting by the maximal child weight keeps `exp` in range
/// however large the weight gaps get.
fn child_weights(view: &View<'_>, current: u32, alpha: f64) -> Option<Vec<(u32, f64)>> {
    let tangle = view.tangle();
    let mut children: Vec<u32> = view.visible_children(current).collect();
    if children.is_empty() {
        return None;
    }
    children.sort_unstable_by(|&a, &b| tangle.id_at(a).cmp(tangle.id_at(b)));
    children.dedup();
    let weights: Vec<u64> = children.iter().map(|&c| view.weight_at(c)).collect();
    let max_w = *weights.iter().max().unwrap();
    let mut probs: Vec<f64> = weights
        .iter()
        .map(|&w| (alpha * (w as f64 - max_w as f64)).exp())
        .collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Some(children.into_iter().zip(probs).collect())
}

fn walk<R: Rng + ?Sized>(view: &View<'_>, alpha: f64, rng: &mut R) -> u32 {
    let mut current = view
        .genesis_idx()
        .expect("walk requires a non-empty tangle");
    while let Some(step) = child_weights(view, current, alpha) {
        let draw: f64 = rng.random();
        let mut acc = 0.0;
        current = step.last().unwrap().0;
        for (child, p) in step {
            acc += p;
            if draw < acc {
                current = child;
                break;
            }
        }
    }
    current
}

/// Biased-walk selector: two independent walks from the genesis. If the two
/// tips conflict, both walks rerun, up to [`MAX_REDRAWS`] times, then the
/// deterministic fallback applies.
///
/// Panics if the view is empty.
pub fn select_mcmc<R: Rng + ?Sized>(view: &View<'_>, alpha: f64, rng: &mut R) -> ParentPair {
    let tangle = view.tangle();
    for _ in 0..MAX_REDRAWS {
        let a = walk(view, alpha, rng);
        let b = walk(view, alpha, rng);
        if !tangle.induced_conflicts_idx(a, b) {
            return ParentPair::new(tangle.id_at(a).clone(), tangle.id_at(b).clone());
        }
    }
    fallback_pair(view, &view.raw_tip_indices())
}
