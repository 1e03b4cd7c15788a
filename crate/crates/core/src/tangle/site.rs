use std::fmt;

use serde::{Deserialize, Serialize};

/// Opaque site identifier with a total order (lexicographic over the
/// canonical string form). The order is what makes tie-breaking and all
/// exported listings deterministic.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteId(String);

impl SiteId {
    pub fn new(id: impl Into<String>) -> Self {
        SiteId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SiteId {
    fn from(s: &str) -> Self {
        SiteId(s.to_owned())
    }
}

/// Spend-key identifier: sites sharing a key spend the same funds.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpendKey(String);

impl SpendKey {
    pub fn new(key: impl Into<String>) -> Self {
        SpendKey(key.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SpendKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SpendKey {
    fn from(s: &str) -> Self {
        SpendKey(s.to_owned())
    }
}

/// Conflict handle carried by a site. Two sites with the same key but
/// different branches are directly conflicting; at most one site per
/// `(key, branch)` pair may exist in a tangle.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpendLabel {
    pub key: SpendKey,
    pub branch: String,
}

impl SpendLabel {
    pub fn new(key: impl Into<String>, branch: impl Into<String>) -> Self {
        SpendLabel {
            key: SpendKey::new(key),
            branch: branch.into(),
        }
    }
}

/// Who issued a site. Honest nodes are numbered; the genesis and the
/// adversary are singled out so traces and views can tell them apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Issuer {
    Genesis,
    Node(u32),
    Adversary,
}

/// Immutable DAG vertex: two parent references (duplicates permitted),
/// an issuer, an issue time, and an optional spend label. Own weight is
/// always 1; the genesis is the only site without parents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: SiteId,
    pub parents: Option<(SiteId, SiteId)>,
    pub issuer: Issuer,
    pub issue_time: f64,
    pub label: Option<SpendLabel>,
}

impl Site {
    pub fn genesis(id: impl Into<SiteId>) -> Self {
        Site {
            id: id.into(),
            parents: None,
            issuer: Issuer::Genesis,
            issue_time: 0.0,
            label: None,
        }
    }

    pub fn new(
        id: impl Into<SiteId>,
        parents: (impl Into<SiteId>, impl Into<SiteId>),
        issuer: Issuer,
        issue_time: f64,
    ) -> Self {
        Site {
            id: id.into(),
            parents: Some((parents.0.into(), parents.1.into())),
            issuer,
            issue_time,
            label: None,
        }
    }

    pub fn with_label(mut self, key: impl Into<String>, branch: impl Into<String>) -> Self {
        self.label = Some(SpendLabel::new(key, branch));
        self
    }

    pub fn is_genesis(&self) -> bool {
        self.parents.is_none()
    }
}

/// Cumulative weight of a site: 1 (its own weight) plus the number of
/// distinct sites that confirm it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CumulativeWeight(pub u64);

impl CumulativeWeight {
    pub fn get(self) -> u64 {
        self.0
    }
}

impl fmt::Display for CumulativeWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
