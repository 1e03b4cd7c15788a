//! Seeded random tangle growth for tests and benchmarks.

use rand::Rng;

use crate::tangle::{Issuer, Site, Tangle};
use crate::tsa::resolve_conflicts;

/// Shape of the random growth.
#[derive(Clone, Debug)]
pub struct GrowthParams {
    pub sites: usize,
    /// Probability that a new site carries a spend label.
    pub label_probability: f64,
    /// Number of distinct spend keys labels draw from.
    pub keys: usize,
    /// Branches per key (two suffice for a double spend).
    pub branches: usize,
}

impl Default for GrowthParams {
    fn default() -> Self {
        GrowthParams {
            sites: 64,
            label_probability: 0.2,
            keys: 3,
            branches: 2,
        }
    }
}

const BRANCH_NAMES: [&str; 4] = ["A", "B", "C", "D"];

/// Grow a random tangle: each site picks two parents uniformly among the
/// existing sites and occasionally a random spend label. Insertions the
/// tangle rejects (conflicting past, duplicate branch) are retried without
/// the label, so the requested size is always reached.
pub fn random_tangle<R: Rng + ?Sized>(rng: &mut R, params: &GrowthParams) -> Tangle {
    let mut tangle = Tangle::new();
    tangle.add_site(Site::genesis("g")).unwrap();
    for seq in 0..params.sites.saturating_sub(1) {
        let site = random_site(rng, &tangle, seq, params);
        tangle.add_site(site).unwrap();
    }
    tangle
}

/// One random site valid for the current tangle.
pub fn random_site<R: Rng + ?Sized>(
    rng: &mut R,
    tangle: &Tangle,
    seq: usize,
    params: &GrowthParams,
) -> Site {
    let ids: Vec<_> = tangle.sites().map(|s| s.id.clone()).collect();
    loop {
        let p = ids[rng.random_range(0..ids.len())].clone();
        let q = ids[rng.random_range(0..ids.len())].clone();
        let mut site = Site::new(
            format!("s{seq:04}").as_str(),
            (p, q),
            Issuer::Node(rng.random_range(0..4)),
            seq as f64 + 1.0,
        );
        if rng.random::<f64>() < params.label_probability {
            let key = format!("k{}", rng.random_range(0..params.keys));
            let branch = BRANCH_NAMES[rng.random_range(0..params.branches.min(4))];
            site = site.with_label(key.as_str(), branch);
        }
        match tangle.check_site(&site) {
            Ok(()) => return site,
            Err(_) => {
                // retry with fresh parents and label
            }
        }
    }
}

/// Drive one random interleaving of own issuances and incoming sites,
/// checking after every event that the incrementally maintained state
/// matches a resolution from scratch. Errors describe the first divergence.
pub fn incremental_matches_batch<R: Rng + ?Sized>(
    rng: &mut R,
    events: usize,
    params: &GrowthParams,
) -> Result<(), String> {
    let mut tangle = Tangle::new();
    tangle.add_site(Site::genesis("g")).unwrap();
    let mut state = resolve_conflicts(&tangle.full_view());
    for seq in 0..events {
        if rng.random::<f64>() < 0.45 {
            // own site: dispatch on the current state
            let pair = state
                .dispatch(&tangle, rng)
                .map_err(|e| format!("dispatch failed at event {seq}: {e}"))?;
            let site = Site::new(
                format!("o{seq:04}").as_str(),
                (pair.p1.clone(), pair.p2.clone()),
                Issuer::Node(0),
                seq as f64 + 1.0,
            );
            tangle
                .add_site(site.clone())
                .map_err(|e| format!("own site rejected at event {seq}: {e}"))?;
            state
                .record_own_site(&tangle, &site.id, &pair)
                .map_err(|e| format!("record_own_site failed at event {seq}: {e}"))?;
        } else {
            let site = random_site(rng, &tangle, seq, params);
            tangle.add_site(site.clone()).unwrap();
            state
                .record_incoming_site(&tangle.full_view(), &site.id)
                .map_err(|e| format!("record_incoming_site failed at event {seq}: {e}"))?;
        }
        let batch = resolve_conflicts(&tangle.full_view());
        if !state.same_resolution(&batch) {
            return Err(format!(
                "divergence after event {seq}: incremental tips {:?} discarded {:?}, \
                 batch tips {:?} discarded {:?}",
                state.tip_ids(&tangle),
                state.discarded_ids(&tangle),
                batch.tip_ids(&tangle),
                batch.discarded_ids(&tangle),
            ));
        }
    }
    Ok(())
}
