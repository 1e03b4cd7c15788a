use rand::Rng;

use super::{fallback_pair, ParentPair, MAX_REDRAWS};
use crate::tangle::View;

/// Uniform selector: each parent drawn independently and uniformly from the
/// view's raw tips. Conflicting draws are rejected and redrawn up to
/// [`MAX_REDRAWS`] times, then the deterministic fallback applies.
///
/// Panics if the view is empty.
pub fn select_uniform<R: Rng + ?Sized>(view: &View<'_>, rng: &mut R) -> ParentPair {
    let tips = view.raw_tip_indices();
    assert!(!tips.is_empty(), "a non-empty tangle always has a raw tip");
    let tangle = view.tangle();
    for _ in 0..MAX_REDRAWS {
        let a = tips[rng.random_range(0..tips.len())];
        let b = tips[rng.random_range(0..tips.len())];
        if !tangle.induced_conflicts_idx(a, b) {
            return ParentPair::new(tangle.id_at(a).clone(), tangle.id_at(b).clone());
        }
    }
    fallback_pair(view, &tips)
}
