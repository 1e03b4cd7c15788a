//! The Tangle DAG: append-only site store with reachability, cumulative
//! weight, raw-tip tracking, and the spend-label conflict model.
//!
//! Reachability is kept as one ancestor bit set and one descendant bit set
//! per site, indexed by insertion order. Parents must exist at insertion, so
//! every ancestor of a site has a smaller index; descendant sets grow as new
//! sites arrive. Cumulative weight of `s` is then a masked popcount over
//! `descendants[s]`, which is what makes weighted walks and per-view weight
//! queries affordable.

mod conflict;
mod site;

use std::collections::BTreeMap;
use std::collections::HashMap;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::bitset::BitSet;

pub use conflict::directly_conflicts;
pub use site::{CumulativeWeight, Issuer, Site, SiteId, SpendKey, SpendLabel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TangleError {
    #[error("unknown parent {0}")]
    UnknownParent(SiteId),
    #[error("duplicate site id {0}")]
    DuplicateId(SiteId),
    #[error("past cone of {0} would contain two conflicting sites")]
    SelfConflictingPast(SiteId),
    #[error("branch {branch} of spend key {key} was already issued")]
    DuplicateSpendBranch { key: SpendKey, branch: String },
    #[error("tangle already has a genesis, site {0} has no parents")]
    ExtraGenesis(SiteId),
    #[error("unknown site {0}")]
    UnknownSite(SiteId),
    #[error("set is not conflict-free")]
    NotConflictFree,
}

/// Append-only DAG of sites. The genesis is the only site without parents;
/// insertion rejects sites whose past cone would contain two directly
/// conflicting sites, so every stored past cone is conflict-free.
#[derive(Clone, Debug, Default)]
pub struct Tangle {
    sites: Vec<Site>,
    parent_idx: Vec<Option<(u32, u32)>>,
    index: HashMap<SiteId, u32>,
    children: Vec<Vec<u32>>,
    ancestors: Vec<BitSet>,
    descendants: Vec<BitSet>,
    /// Sites carrying each spend key, in insertion order.
    labels: BTreeMap<SpendKey, Vec<u32>>,
    childless_count: usize,
}

impl Tangle {
    pub fn new() -> Self {
        Tangle::default()
    }

    /// Rebuild a tangle by replaying `sites` in order.
    pub fn from_sites(sites: impl IntoIterator<Item = Site>) -> Result<Self, TangleError> {
        let mut tangle = Tangle::new();
        for site in sites {
            tangle.add_site(site)?;
        }
        Ok(tangle)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, id: &SiteId) -> bool {
        self.index.contains_key(id)
    }

    pub fn site(&self, id: &SiteId) -> Option<&Site> {
        self.index.get(id).map(|&i| &self.sites[i as usize])
    }

    /// Sites in insertion order.
    pub fn sites(&self) -> impl Iterator<Item = &Site> {
        self.sites.iter()
    }

    pub fn genesis(&self) -> Option<&Site> {
        self.sites.first()
    }

    /// Spend keys present in the tangle, in key order.
    pub fn spend_keys(&self) -> impl Iterator<Item = &SpendKey> {
        self.labels.keys()
    }

    /// Sites carrying `key`, in insertion order.
    pub fn key_members(&self, key: &SpendKey) -> Vec<SiteId> {
        self.labels
            .get(key)
            .map(|m| {
                m.iter()
                    .map(|&i| self.sites[i as usize].id.clone())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Would [`add_site`](Self::add_site) accept this site right now?
    pub fn check_site(&self, site: &Site) -> Result<(), TangleError> {
        self.validate(site).map(|_| ())
    }

    #[allow(clippy::type_complexity)]
    fn validate(&self, site: &Site) -> Result<(Option<(u32, u32)>, Option<BitSet>), TangleError> {
        if self.index.contains_key(&site.id) {
            return Err(TangleError::DuplicateId(site.id.clone()));
        }
        let parents = match &site.parents {
            None => {
                if !self.sites.is_empty() {
                    return Err(TangleError::ExtraGenesis(site.id.clone()));
                }
                None
            }
            Some((p, q)) => {
                let pi = *self
                    .index
                    .get(p)
                    .ok_or_else(|| TangleError::UnknownParent(p.clone()))?;
                let qi = *self
                    .index
                    .get(q)
                    .ok_or_else(|| TangleError::UnknownParent(q.clone()))?;
                Some((pi, qi))
            }
        };

        if let Some(label) = &site.label {
            if let Some(members) = self.labels.get(&label.key) {
                for &m in members {
                    if self.sites[m as usize].label.as_ref().unwrap().branch == label.branch {
                        return Err(TangleError::DuplicateSpendBranch {
                            key: label.key.clone(),
                            branch: label.branch.clone(),
                        });
                    }
                }
            }
        }

        let past = parents.map(|(pi, qi)| {
            let mut cone = self.ancestors[pi as usize].clone();
            cone.union_with(&self.ancestors[qi as usize]);
            cone.set(pi as usize);
            cone.set(qi as usize);
            cone
        });
        if let Some(past) = &past {
            if self.past_is_conflicting(past, site.label.as_ref()) {
                return Err(TangleError::SelfConflictingPast(site.id.clone()));
            }
        }
        Ok((parents, past))
    }

    /// Append a site. Parents must already be present (except for the
    /// genesis, which must be the first site and has none).
    pub fn add_site(&mut self, site: Site) -> Result<(), TangleError> {
        let (parents, past) = self.validate(&site)?;

        let idx = self.sites.len() as u32;
        let ancestors = past.unwrap_or_default();
        for a in ancestors.iter_ones() {
            self.descendants[a].set(idx as usize);
        }
        if let Some((pi, qi)) = parents {
            for parent in if pi == qi { vec![pi] } else { vec![pi, qi] } {
                if self.children[parent as usize].is_empty() {
                    self.childless_count -= 1;
                }
                self.children[parent as usize].push(idx);
            }
        }
        if let Some(label) = &site.label {
            self.labels.entry(label.key.clone()).or_default().push(idx);
        }
        self.index.insert(site.id.clone(), idx);
        self.sites.push(site);
        self.parent_idx.push(parents);
        self.children.push(Vec::new());
        self.ancestors.push(ancestors);
        self.descendants.push(BitSet::new());
        self.childless_count += 1;
        Ok(())
    }

    /// Would a site with this past cone and label sit above two directly
    /// conflicting sites?
    fn past_is_conflicting(&self, past: &BitSet, label: Option<&SpendLabel>) -> bool {
        for members in self.labels.values() {
            let mut seen_branch: Option<&str> = None;
            for &m in members {
                if past.contains(m as usize) {
                    let branch = &self.sites[m as usize].label.as_ref().unwrap().branch;
                    match seen_branch {
                        Some(b) if b != branch => return true,
                        Some(_) => {}
                        None => seen_branch = Some(branch),
                    }
                }
            }
        }
        if let Some(label) = label {
            if let Some(members) = self.labels.get(&label.key) {
                for &m in members {
                    if past.contains(m as usize)
                        && self.sites[m as usize].label.as_ref().unwrap().branch != label.branch
                    {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// True iff `b` is a strict ancestor of `a` (a site never confirms
    /// itself).
    pub fn confirms(&self, a: &SiteId, b: &SiteId) -> Result<bool, TangleError> {
        let ai = self.require(a)?;
        let bi = self.require(b)?;
        Ok(self.ancestors[ai as usize].contains(bi as usize))
    }

    /// 1 plus the number of distinct sites confirming `s`.
    pub fn cumulative_weight(&self, s: &SiteId) -> Result<CumulativeWeight, TangleError> {
        let i = self.require(s)?;
        Ok(CumulativeWeight(
            self.descendants[i as usize].count() as u64 + 1,
        ))
    }

    /// Sites without children, ordered by id.
    pub fn raw_tips(&self) -> Vec<SiteId> {
        let mut tips: Vec<SiteId> = self
            .children
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_empty())
            .map(|(i, _)| self.sites[i].id.clone())
            .collect();
        tips.sort_unstable();
        tips
    }

    pub fn raw_tip_count(&self) -> usize {
        self.childless_count
    }

    /// View over the whole tangle.
    pub fn full_view(&self) -> View<'_> {
        let visible = (0..self.sites.len()).collect();
        View {
            tangle: self,
            visible,
        }
    }

    /// What `issuer` sees at time `now` under propagation latency
    /// `latency`: every site issued at or before `now - latency`, all of the
    /// issuer's own sites, the genesis, and the parent closure of all that.
    pub fn node_view(&self, now: f64, latency: f64, issuer: Issuer) -> View<'_> {
        let mut visible = BitSet::with_capacity_bits(self.sites.len());
        for (i, site) in self.sites.iter().enumerate() {
            if site.issue_time <= now - latency || site.issuer == issuer || site.is_genesis() {
                visible.set(i);
            }
        }
        self.view_from_bits(visible)
    }

    /// View from an explicit visibility set; closed under parents and always
    /// containing the genesis.
    pub(crate) fn view_from_bits(&self, mut visible: BitSet) -> View<'_> {
        if !self.sites.is_empty() {
            visible.set(0);
        }
        // Parents precede children in insertion order, so one descending
        // sweep closes the set.
        for i in (0..self.sites.len()).rev() {
            if visible.contains(i) {
                if let Some((p, q)) = self.parent_idx[i] {
                    visible.set(p as usize);
                    visible.set(q as usize);
                }
            }
        }
        View {
            tangle: self,
            visible,
        }
    }

    /// View from a visibility set the caller guarantees to be parent-closed
    /// (the simulator's delivery order makes this hold by construction).
    pub(crate) fn view_from_bits_unchecked(&self, visible: BitSet) -> View<'_> {
        debug_assert!(
            visible.iter_ones().all(|i| match self.parent_idx[i] {
                Some((p, q)) => visible.contains(p as usize) && visible.contains(q as usize),
                None => true,
            }),
            "visibility set must be closed under parents"
        );
        View {
            tangle: self,
            visible,
        }
    }

    pub(crate) fn require(&self, id: &SiteId) -> Result<u32, TangleError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| TangleError::UnknownSite(id.clone()))
    }

    pub(crate) fn idx_of(&self, id: &SiteId) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub(crate) fn id_at(&self, idx: u32) -> &SiteId {
        &self.sites[idx as usize].id
    }

    pub(crate) fn site_at(&self, idx: u32) -> &Site {
        &self.sites[idx as usize]
    }

    pub(crate) fn parents_at(&self, idx: u32) -> Option<(u32, u32)> {
        self.parent_idx[idx as usize]
    }

    pub(crate) fn ancestors_at(&self, idx: u32) -> &BitSet {
        &self.ancestors[idx as usize]
    }

    pub(crate) fn descendants_at(&self, idx: u32) -> &BitSet {
        &self.descendants[idx as usize]
    }

    pub(crate) fn label_index(&self) -> &BTreeMap<SpendKey, Vec<u32>> {
        &self.labels
    }
}

impl PartialEq for Tangle {
    fn eq(&self, other: &Self) -> bool {
        self.sites == other.sites
    }
}

impl Serialize for Tangle {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.sites.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Tangle {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let sites = Vec::<Site>::deserialize(deserializer)?;
        Tangle::from_sites(sites).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> SiteId {
        SiteId::from(s)
    }

    fn site(name: &str, p: (&str, &str), t: f64) -> Site {
        Site::new(name, p, Issuer::Node(0), t)
    }

    /// g; a(g,g); b(g,g); c(a,g).
    fn t1() -> Tangle {
        let mut t = Tangle::new();
        t.add_site(Site::genesis("g")).unwrap();
        t.add_site(site("a", ("g", "g"), 1.0)).unwrap();
        t.add_site(site("b", ("g", "g"), 2.0)).unwrap();
        t.add_site(site("c", ("a", "g"), 3.0)).unwrap();
        t
    }

    #[test]
    fn genesis_bootstrap() {
        let mut t = Tangle::new();
        t.add_site(Site::genesis("g")).unwrap();
        assert_eq!(t.raw_tips(), vec![id("g")]);
        t.add_site(site("a", ("g", "g"), 1.0)).unwrap();
        assert_eq!(t.raw_tips(), vec![id("a")]);
    }

    #[test]
    fn add_site_rejections() {
        let mut t = Tangle::new();
        assert_eq!(
            t.add_site(site("a", ("g", "g"), 1.0)),
            Err(TangleError::UnknownParent(id("g")))
        );
        t.add_site(Site::genesis("g")).unwrap();
        assert_eq!(
            t.add_site(Site::genesis("g2")),
            Err(TangleError::ExtraGenesis(id("g2")))
        );
        t.add_site(site("a", ("g", "g"), 1.0)).unwrap();
        assert_eq!(
            t.add_site(site("a", ("g", "g"), 2.0)),
            Err(TangleError::DuplicateId(id("a")))
        );
    }

    #[test]
    fn duplicate_spend_branch_rejected() {
        let mut t = Tangle::new();
        t.add_site(Site::genesis("g")).unwrap();
        t.add_site(site("a", ("g", "g"), 1.0).with_label("k", "A"))
            .unwrap();
        assert_eq!(
            t.add_site(site("a2", ("g", "g"), 2.0).with_label("k", "A")),
            Err(TangleError::DuplicateSpendBranch {
                key: SpendKey::new("k"),
                branch: "A".into()
            })
        );
    }

    #[test]
    fn self_conflicting_past_rejected() {
        let mut t = Tangle::new();
        t.add_site(Site::genesis("g")).unwrap();
        t.add_site(site("a", ("g", "g"), 1.0).with_label("k", "A"))
            .unwrap();
        t.add_site(site("b", ("g", "g"), 2.0).with_label("k", "B"))
            .unwrap();
        // x would confirm both branches of key k
        assert_eq!(
            t.add_site(site("x", ("a", "b"), 3.0)),
            Err(TangleError::SelfConflictingPast(id("x")))
        );
        // a site labeled against its own ancestry is just as invalid
        assert_eq!(
            t.add_site(site("y", ("a", "g"), 3.0).with_label("k", "C")),
            Err(TangleError::SelfConflictingPast(id("y")))
        );
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn confirms_is_strict_ancestry() {
        let t = t1();
        assert!(t.confirms(&id("c"), &id("g")).unwrap());
        assert!(!t.confirms(&id("c"), &id("b")).unwrap());
        assert!(!t.confirms(&id("g"), &id("g")).unwrap());
        assert!(!t.confirms(&id("g"), &id("c")).unwrap());
        assert_eq!(
            t.confirms(&id("g"), &id("nope")),
            Err(TangleError::UnknownSite(id("nope")))
        );
    }

    #[test]
    fn cumulative_weight_counts_distinct_descendants() {
        let t = t1();
        assert_eq!(t.cumulative_weight(&id("g")).unwrap().get(), 4);
        assert_eq!(t.cumulative_weight(&id("b")).unwrap().get(), 1);
        // diamond: d reaches g along two paths but counts once
        let mut d = Tangle::new();
        d.add_site(Site::genesis("g")).unwrap();
        d.add_site(site("a", ("g", "g"), 1.0)).unwrap();
        d.add_site(site("b", ("g", "g"), 1.0)).unwrap();
        d.add_site(site("d", ("a", "b"), 2.0)).unwrap();
        assert_eq!(d.cumulative_weight(&id("g")).unwrap().get(), 4);
    }

    #[test]
    fn raw_tips_track_children() {
        let mut t = t1();
        assert_eq!(t.raw_tips(), vec![id("b"), id("c")]);
        assert_eq!(t.raw_tip_count(), 2);
        t.add_site(site("d", ("b", "c"), 4.0)).unwrap();
        assert_eq!(t.raw_tips(), vec![id("d")]);
        assert_eq!(t.raw_tip_count(), 1);
    }

    #[test]
    fn node_view_latency_threshold() {
        let mut t = Tangle::new();
        t.add_site(Site::genesis("g")).unwrap();
        t.add_site(site("x", ("g", "g"), 5.0)).unwrap();
        // invisible to others at t=6 with h=2, visible at t=7
        assert!(!t.node_view(6.0, 2.0, Issuer::Node(9)).contains(&id("x")));
        assert!(t.node_view(7.0, 2.0, Issuer::Node(9)).contains(&id("x")));
        // h = 0 sees everything
        assert_eq!(t.node_view(5.0, 0.0, Issuer::Node(9)).site_count(), 2);
        // h > now: only the genesis plus own sites
        assert_eq!(t.node_view(1.0, 10.0, Issuer::Node(9)).site_count(), 1);
        assert!(t.node_view(5.0, 10.0, Issuer::Node(0)).contains(&id("x")));
    }

    #[test]
    fn node_view_closes_over_parents() {
        let mut t = Tangle::new();
        t.add_site(Site::genesis("g")).unwrap();
        t.add_site(site("x", ("g", "g"), 5.0)).unwrap();
        // own site y has a young foreign parent x; the closure pulls x in
        let mut y = site("y", ("x", "g"), 5.5);
        y.issuer = Issuer::Node(1);
        t.add_site(y).unwrap();
        let view = t.node_view(5.6, 2.0, Issuer::Node(1));
        assert!(view.contains(&id("y")));
        assert!(view.contains(&id("x")));
    }

    #[test]
    fn view_weights_and_tips_are_restricted() {
        let t = t1();
        let view = t.node_view(3.0, 1.5, Issuer::Node(7)); // sees g, a only
        assert_eq!(view.site_count(), 2);
        assert_eq!(view.cumulative_weight(&id("g")).unwrap().get(), 2);
        assert_eq!(view.raw_tips(), vec![id("a")]);
        assert!(view.cumulative_weight(&id("c")).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let t = t1();
        let json = serde_json::to_string(&t).unwrap();
        let back: Tangle = serde_json::from_str(&json).unwrap();
        assert_eq!(t, back);
        assert_eq!(back.raw_tips(), t.raw_tips());
    }

    #[test]
    fn deserializing_an_invalid_site_list_fails() {
        let json = r#"[
            {"id":"g","parents":null,"issuer":"Genesis","issue_time":0.0,"label":null},
            {"id":"a","parents":["nope","g"],"issuer":{"Node":0},"issue_time":1.0,"label":null}
        ]"#;
        let err = serde_json::from_str::<Tangle>(json).unwrap_err();
        assert!(err.to_string().contains("unknown parent"), "{err}");
    }
}

/// A visibility-restricted read view of a tangle. All indices are the
/// tangle's own, so states computed against a view remain valid as the view
/// grows.
#[derive(Clone, Debug)]
pub struct View<'a> {
    tangle: &'a Tangle,
    visible: BitSet,
}

impl<'a> View<'a> {
    pub fn tangle(&self) -> &'a Tangle {
        self.tangle
    }

    pub fn contains(&self, id: &SiteId) -> bool {
        self.tangle
            .idx_of(id)
            .is_some_and(|i| self.visible.contains(i as usize))
    }

    pub fn site_count(&self) -> usize {
        self.visible.count()
    }

    pub fn site_ids(&self) -> Vec<SiteId> {
        self.visible
            .iter_ones()
            .map(|i| self.tangle.sites[i].id.clone())
            .collect()
    }

    /// Cumulative weight of `s` restricted to visible confirmers.
    pub fn cumulative_weight(&self, s: &SiteId) -> Result<CumulativeWeight, TangleError> {
        let i = self.tangle.require(s)?;
        if !self.visible.contains(i as usize) {
            return Err(TangleError::UnknownSite(s.clone()));
        }
        Ok(CumulativeWeight(self.weight_at(i)))
    }

    /// Visible sites with no visible child, ordered by id.
    pub fn raw_tips(&self) -> Vec<SiteId> {
        self.raw_tip_indices()
            .into_iter()
            .map(|i| self.tangle.id_at(i).clone())
            .collect()
    }

    pub(crate) fn contains_idx(&self, idx: u32) -> bool {
        self.visible.contains(idx as usize)
    }

    pub(crate) fn visible_bits(&self) -> &BitSet {
        &self.visible
    }

    pub(crate) fn weight_at(&self, idx: u32) -> u64 {
        debug_assert!(self.visible.contains(idx as usize));
        self.tangle.descendants[idx as usize].intersection_count(&self.visible) as u64 + 1
    }

    pub(crate) fn visible_children(&self, idx: u32) -> impl Iterator<Item = u32> + '_ {
        self.tangle.children[idx as usize]
            .iter()
            .copied()
            .filter(|&c| self.visible.contains(c as usize))
    }

    pub(crate) fn has_visible_child(&self, idx: u32) -> bool {
        self.visible_children(idx).next().is_some()
    }

    /// Indices of visible sites with no visible child, sorted by site id.
    pub(crate) fn raw_tip_indices(&self) -> Vec<u32> {
        let mut tips: Vec<u32> = self
            .visible
            .iter_ones()
            .map(|i| i as u32)
            .filter(|&i| !self.has_visible_child(i))
            .collect();
        tips.sort_unstable_by(|&a, &b| self.tangle.id_at(a).cmp(self.tangle.id_at(b)));
        tips
    }

    pub(crate) fn genesis_idx(&self) -> Option<u32> {
        if self.tangle.is_empty() {
            None
        } else {
            Some(0)
        }
    }
}
