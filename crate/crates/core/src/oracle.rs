//! Brute-force reference implementations used as independent oracles in
//! tests. Everything here works from the public site data alone (ids and
//! parent references), never from the tangle's reachability indexes, so a
//! bug in those indexes cannot hide from a comparison against this module.

use std::collections::{BTreeMap, BTreeSet};

use crate::tangle::{SiteId, Tangle};

/// Ancestor id-sets for every site, by per-site graph search over parent
/// references.
pub fn ancestor_sets(tangle: &Tangle) -> BTreeMap<SiteId, BTreeSet<SiteId>> {
    let mut out = BTreeMap::new();
    for site in tangle.sites() {
        let mut seen: BTreeSet<SiteId> = BTreeSet::new();
        let mut stack: Vec<SiteId> = Vec::new();
        if let Some((p, q)) = &site.parents {
            stack.push(p.clone());
            stack.push(q.clone());
        }
        while let Some(id) = stack.pop() {
            if !seen.insert(id.clone()) {
                continue;
            }
            if let Some((p, q)) = &tangle.site(&id).unwrap().parents {
                stack.push(p.clone());
                stack.push(q.clone());
            }
        }
        out.insert(site.id.clone(), seen);
    }
    out
}

/// Cumulative weights by distinct-descendant counting: invert the ancestor
/// sets and add the site's own weight of 1.
pub fn cumulative_weights(tangle: &Tangle) -> BTreeMap<SiteId, u64> {
    let ancestors = ancestor_sets(tangle);
    let mut weights: BTreeMap<SiteId, u64> = tangle.sites().map(|s| (s.id.clone(), 1)).collect();
    for ancs in ancestors.values() {
        for a in ancs {
            *weights.get_mut(a).unwrap() += 1;
        }
    }
    weights
}

/// Hereditary conflict check straight from the definition: some labeled site
/// in `past(a) ∪ {a}` directly conflicts with one in `past(b) ∪ {b}`.
pub fn induced_conflicts(tangle: &Tangle, a: &SiteId, b: &SiteId) -> bool {
    let ancestors = ancestor_sets(tangle);
    let cone = |root: &SiteId| {
        let mut c = ancestors[root].clone();
        c.insert(root.clone());
        c
    };
    let cone_a = cone(a);
    let cone_b = cone(b);
    for x in &cone_a {
        let sx = tangle.site(x).unwrap();
        let Some(lx) = &sx.label else { continue };
        for y in &cone_b {
            let sy = tangle.site(y).unwrap();
            if let Some(ly) = &sy.label {
                if x != y && lx.key == ly.key && lx.branch != ly.branch {
                    return true;
                }
            }
        }
    }
    false
}
