//! Conflict predicates over sites and site sets.
//!
//! Conflicts are declared through spend labels and propagate through
//! confirmation: two sites conflict if their past cones (inclusive) contain
//! directly conflicting labeled sites.

use super::{Site, SiteId, Tangle, TangleError};

/// Two sites conflict directly when they carry the same spend key on
/// different branches. A site never conflicts with itself.
pub fn directly_conflicts(a: &Site, b: &Site) -> bool {
    if a.id == b.id {
        return false;
    }
    match (&a.label, &b.label) {
        (Some(la), Some(lb)) => la.key == lb.key && la.branch != lb.branch,
        _ => false,
    }
}

impl Tangle {
    /// Hereditary conflict: true iff some site in `past(a) ∪ {a}` directly
    /// conflicts with some site in `past(b) ∪ {b}`.
    pub fn induced_conflicts(&self, a: &SiteId, b: &SiteId) -> Result<bool, TangleError> {
        let ai = self.require(a)?;
        let bi = self.require(b)?;
        Ok(self.induced_conflicts_idx(ai, bi))
    }

    pub(crate) fn induced_conflicts_idx(&self, a: u32, b: u32) -> bool {
        let in_cone = |cone_root: u32, m: u32| {
            m == cone_root || self.ancestors_at(cone_root).contains(m as usize)
        };
        // Only labeled sites can conflict, so scanning the (small) label
        // index beats walking the cones.
        for members in self.label_index().values() {
            for &m1 in members {
                if !in_cone(a, m1) {
                    continue;
                }
                let b1 = &self.site_at(m1).label.as_ref().unwrap().branch;
                for &m2 in members {
                    if m2 != m1
                        && in_cone(b, m2)
                        && &self.site_at(m2).label.as_ref().unwrap().branch != b1
                    {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// True iff no pair of sites in `set` has an induced conflict.
    pub fn is_conflict_free_set(&self, set: &[SiteId]) -> Result<bool, TangleError> {
        let idx: Vec<u32> = set
            .iter()
            .map(|id| self.require(id))
            .collect::<Result<_, _>>()?;
        Ok(self.is_conflict_free_idx(&idx))
    }

    pub(crate) fn is_conflict_free_idx(&self, set: &[u32]) -> bool {
        for (n, &a) in set.iter().enumerate() {
            for &b in &set[n + 1..] {
                if self.induced_conflicts_idx(a, b) {
                    return false;
                }
            }
        }
        true
    }

    /// Definition check, by brute force over every site `s` in the tangle:
    /// a conflict-free `set` is a set of tips iff there is no `s` confirming
    /// some `t ∈ set` with `set ∪ {s}` still conflict-free.
    ///
    /// Errors with [`TangleError::NotConflictFree`] when the precondition
    /// fails.
    pub fn is_tip_set(&self, set: &[SiteId]) -> Result<bool, TangleError> {
        let idx: Vec<u32> = set
            .iter()
            .map(|id| self.require(id))
            .collect::<Result<_, _>>()?;
        if !self.is_conflict_free_idx(&idx) {
            return Err(TangleError::NotConflictFree);
        }
        for s in 0..self.len() as u32 {
            let confirms_member = idx
                .iter()
                .any(|&t| s != t && self.ancestors_at(s).contains(t as usize));
            if !confirms_member {
                continue;
            }
            let compatible = idx.iter().all(|&t| !self.induced_conflicts_idx(s, t));
            if compatible {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
