//! The two-step selector.
//!
//! Step one resolves every spend-key conflict deterministically: the member
//! with the highest cumulative weight wins (ties to the smaller id), losers
//! and everything confirming a loser are discarded, and the conflict-free
//! tip set is the non-discarded frontier. Step two dispatches parents
//! uniformly over that set.
//!
//! The state carries cached weights for conflict members so that ordinary
//! traffic updates in constant time: own sites and incoming conflict-free
//! sites only touch the tip set, and sites extending a losing branch only
//! bump that loser's cached weight. A full recomputation happens only when a
//! winner actually flips or a new conflict appears.

use std::collections::BTreeMap;

use rand::Rng;

use super::{ParentPair, TsaError};
use crate::bitset::BitSet;
use crate::tangle::{SiteId, SpendKey, Tangle, View};

/// One resolved spend-key conflict: members ordered by descending priority
/// (weight, then smaller id), winner first.
#[derive(Clone, Debug, PartialEq)]
pub struct ConflictRecord {
    key: SpendKey,
    /// `(site index, cached cumulative weight)`. Loser caches are exact;
    /// the winner's cache may lag behind until a challenger catches up.
    members: Vec<(u32, u64)>,
}

impl ConflictRecord {
    pub fn key(&self) -> &SpendKey {
        &self.key
    }

    pub fn winner_id(&self, tangle: &Tangle) -> SiteId {
        tangle.id_at(self.members[0].0).clone()
    }

    /// Members with their cached weights, winner first.
    pub fn members(&self, tangle: &Tangle) -> Vec<(SiteId, u64)> {
        self.members
            .iter()
            .map(|&(i, w)| (tangle.id_at(i).clone(), w))
            .collect()
    }

    pub(crate) fn winner_idx(&self) -> u32 {
        self.members[0].0
    }

    fn sort(&mut self, tangle: &Tangle) {
        self.members.sort_unstable_by(|&(ai, aw), &(bi, bw)| {
            bw.cmp(&aw)
                .then_with(|| tangle.id_at(ai).cmp(tangle.id_at(bi)))
        });
    }
}

/// Output and cache of the conflict resolution step.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoStepState {
    conflicts: BTreeMap<SpendKey, ConflictRecord>,
    /// Sites whose past cone (inclusive) contains a losing conflict member.
    discarded: BitSet,
    /// The conflict-free set of tips, sorted by site id.
    tips: Vec<u32>,
}

/// Conflict resolution from scratch over a view (the batch path).
///
/// For each spend key with at least two visible members, the member
/// maximizing (cumulative weight, then smaller id) wins; all other members
/// lose. Discarded sites are the losers plus every site confirming one. The
/// tip set is every non-discarded site without a non-discarded child.
pub fn resolve_conflicts(view: &View<'_>) -> TwoStepState {
    let tangle = view.tangle();
    let mut conflicts = BTreeMap::new();
    let mut discarded = BitSet::new();
    for (key, members) in tangle.label_index() {
        let visible: Vec<u32> = members
            .iter()
            .copied()
            .filter(|&m| view.contains_idx(m))
            .collect();
        if visible.len() < 2 {
            continue;
        }
        let mut record = ConflictRecord {
            key: key.clone(),
            members: visible.iter().map(|&m| (m, view.weight_at(m))).collect(),
        };
        record.sort(tangle);
        for &(loser, _) in &record.members[1..] {
            discarded.set(loser as usize);
            discarded.union_masked(tangle.descendants_at(loser), view.visible_bits());
        }
        conflicts.insert(key.clone(), record);
    }

    let mut tips: Vec<u32> = view
        .visible_bits()
        .iter_ones()
        .map(|i| i as u32)
        .filter(|&i| {
            !discarded.contains(i as usize)
                && !view
                    .visible_children(i)
                    .any(|c| !discarded.contains(c as usize))
        })
        .collect();
    tips.sort_unstable_by(|&a, &b| tangle.id_at(a).cmp(tangle.id_at(b)));

    TwoStepState {
        conflicts,
        discarded,
        tips,
    }
}

impl TwoStepState {
    /// Tip dispatch: a uniform draw of two distinct tips when the set has at
    /// least two members, the sole tip twice otherwise.
    pub fn dispatch<R: Rng + ?Sized>(
        &self,
        tangle: &Tangle,
        rng: &mut R,
    ) -> Result<ParentPair, TsaError> {
        match self.tips.len() {
            0 => Err(TsaError::EmptyTipSet),
            1 => {
                let id = tangle.id_at(self.tips[0]).clone();
                Ok(ParentPair::new(id.clone(), id))
            }
            n => {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                // tips are sorted by id, so index order is id order
                let (lo, hi) = (a.min(b), a.max(b));
                Ok(ParentPair::new(
                    tangle.id_at(self.tips[lo]).clone(),
                    tangle.id_at(self.tips[hi]).clone(),
                ))
            }
        }
    }

    /// Account for a site this node just issued with parents previously
    /// returned by [`dispatch`](Self::dispatch) on this state: the new tip
    /// set is `tips ∪ {site} ∖ {p1, p2}`. Constant time; no weights change
    /// because the site confirms no conflict member beyond what its parents
    /// already did.
    pub fn record_own_site(
        &mut self,
        tangle: &Tangle,
        site: &SiteId,
        chosen: &ParentPair,
    ) -> Result<(), TsaError> {
        let idx = tangle
            .idx_of(site)
            .ok_or_else(|| TsaError::SiteNotInTangle(site.clone()))?;
        let p1 = tangle
            .idx_of(&chosen.p1)
            .ok_or_else(|| TsaError::SiteNotInTangle(chosen.p1.clone()))?;
        let p2 = tangle
            .idx_of(&chosen.p2)
            .ok_or_else(|| TsaError::SiteNotInTangle(chosen.p2.clone()))?;
        if !self.tips.contains(&p1) || !self.tips.contains(&p2) {
            return Err(TsaError::ParentsNotInTips);
        }
        self.tips.retain(|&t| t != p1 && t != p2);
        self.insert_tip(tangle, idx);
        Ok(())
    }

    /// Account for a site received from the network, already inserted in the
    /// tangle and visible in `view`. Three cases:
    ///
    /// * conflict-free site: it joins the tip set and displaces the tips it
    ///   confirms;
    /// * site extending a losing branch: bump that loser's cached weight,
    ///   and only if it now beats its winner's cache, recompute the winner's
    ///   weight exactly and resolve from scratch when the flip is real;
    /// * site carrying a new conflicting label: resolve from scratch.
    pub fn record_incoming_site(&mut self, view: &View<'_>, site: &SiteId) -> Result<(), TsaError> {
        let tangle = view.tangle();
        let idx = tangle
            .idx_of(site)
            .ok_or_else(|| TsaError::SiteNotInTangle(site.clone()))?;
        debug_assert!(view.contains_idx(idx), "site must be visible in the view");

        if let Some(label) = &tangle.site_at(idx).label {
            let visible_members = tangle.label_index()[&label.key]
                .iter()
                .filter(|&&m| view.contains_idx(m))
                .count();
            if visible_members >= 2 {
                // New branch for this key: the conflict set changed.
                *self = resolve_conflicts(view);
                return Ok(());
            }
        }

        let Some((p1, p2)) = tangle.parents_at(idx) else {
            return Ok(()); // the genesis is in every view from the start
        };
        let extends_loser =
            self.discarded.contains(p1 as usize) || self.discarded.contains(p2 as usize);
        if !extends_loser {
            let cone = tangle.ancestors_at(idx);
            self.tips.retain(|&t| !cone.contains(t as usize));
            self.insert_tip(tangle, idx);
            return Ok(());
        }

        // The site confirms at least one loser, so it is discarded itself.
        self.discarded.set(idx as usize);
        let cone = tangle.ancestors_at(idx);
        let mut flip = false;
        for record in self.conflicts.values_mut() {
            let winner = record.members[0];
            let mut challenged = false;
            let mut bumped = false;
            for member in &mut record.members[1..] {
                if cone.contains(member.0 as usize) {
                    member.1 += 1;
                    bumped = true;
                    if beats(tangle, *member, winner) {
                        challenged = true;
                    }
                }
            }
            if challenged {
                // A challenger caught up with the stale cache: refresh the
                // winner's weight and compare again.
                record.members[0].1 = view.weight_at(winner.0);
                let winner = record.members[0];
                if record.members[1..]
                    .iter()
                    .any(|&m| beats(tangle, m, winner))
                {
                    flip = true;
                }
            }
            if bumped && !flip {
                // Losers keep their priority order; the winner stays put
                // regardless of its possibly stale cache.
                record.members[1..].sort_unstable_by(|&(ai, aw), &(bi, bw)| {
                    bw.cmp(&aw)
                        .then_with(|| tangle.id_at(ai).cmp(tangle.id_at(bi)))
                });
            }
        }
        if flip {
            *self = resolve_conflicts(view);
        }
        Ok(())
    }

    /// Number of tips in the conflict-free set.
    pub fn tip_count(&self) -> usize {
        self.tips.len()
    }

    /// The conflict-free set of tips, ordered by id.
    pub fn tip_ids(&self, tangle: &Tangle) -> Vec<SiteId> {
        self.tips.iter().map(|&i| tangle.id_at(i).clone()).collect()
    }

    pub fn discarded_count(&self) -> usize {
        self.discarded.count()
    }

    pub fn discarded_ids(&self, tangle: &Tangle) -> Vec<SiteId> {
        let mut ids: Vec<SiteId> = self
            .discarded
            .iter_ones()
            .map(|i| tangle.id_at(i as u32).clone())
            .collect();
        ids.sort_unstable();
        ids
    }

    pub fn is_discarded(&self, tangle: &Tangle, id: &SiteId) -> bool {
        tangle
            .idx_of(id)
            .is_some_and(|i| self.discarded.contains(i as usize))
    }

    /// Resolved conflicts in key order.
    pub fn conflicts(&self) -> impl Iterator<Item = &ConflictRecord> {
        self.conflicts.values()
    }

    pub fn winner_of(&self, tangle: &Tangle, key: &SpendKey) -> Option<SiteId> {
        self.conflicts.get(key).map(|r| r.winner_id(tangle))
    }

    /// Same resolution outcome: winners, discarded set, and tip set all
    /// match. Cached weights are excluded since the incremental path lets
    /// winner caches lag.
    pub fn same_resolution(&self, other: &TwoStepState) -> bool {
        self.tips == other.tips
            && self.discarded == other.discarded
            && self.conflicts.len() == other.conflicts.len()
            && self
                .conflicts
                .iter()
                .zip(other.conflicts.iter())
                .all(|((ka, ra), (kb, rb))| ka == kb && ra.winner_idx() == rb.winner_idx())
    }

    pub(crate) fn winner_idx_of(&self, key: &SpendKey) -> Option<u32> {
        self.conflicts.get(key).map(|r| r.winner_idx())
    }

    fn insert_tip(&mut self, tangle: &Tangle, idx: u32) {
        let id = tangle.id_at(idx);
        let pos = self.tips.partition_point(|&t| tangle.id_at(t) < id);
        self.tips.insert(pos, idx);
    }
}

/// Strictly higher priority under the (weight, then smaller id) order.
fn beats(tangle: &Tangle, a: (u32, u64), b: (u32, u64)) -> bool {
    a.1 > b.1 || (a.1 == b.1 && tangle.id_at(a.0) < tangle.id_at(b.0))
}
