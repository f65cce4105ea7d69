//! Truncated nested dyadic partition of a bounded interval.
//!
//! Node `(k, m)` covers `[lo + m w, lo + (m + 1) w)` with `w = (hi - lo) / 2^k`;
//! the rightmost node of each level also owns `hi`. A point sitting exactly on
//! an interior split goes to the right child.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deepest supported truncation level. Leaf indices are computed as
/// `floor(t * 2^k)`, which stays exact in `f64` well past this.
pub const MAX_DEPTH: u32 = 40;

pub const DEFAULT_DEPTH: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    lo: f64,
    hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi && (hi - lo).is_finite()) {
            return Err(Error::InvalidDomain { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub(crate) fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                value: x,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    /// Index of the level-`level` cell holding `x`; `x` must be in the domain.
    fn cell_index(&self, x: f64, level: u32) -> u64 {
        let t = (x - self.lo) / (self.hi - self.lo);
        let cells = (1u64 << level) as f64;
        let idx = (t * cells).floor();
        if idx <= 0.0 {
            0
        } else {
            (idx as u64).min((1u64 << level) - 1)
        }
    }
}

/// A node `(level, index)` of the dyadic partition tree; the root is `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    level: u32,
    index: u64,
}

impl NodeId {
    pub const ROOT: NodeId = NodeId { level: 0, index: 0 };

    pub fn new(level: u32, index: u64) -> Option<Self> {
        if level > MAX_DEPTH || index >= (1u64 << level) {
            return None;
        }
        Some(Self { level, index })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn left(&self) -> NodeId {
        NodeId {
            level: self.level + 1,
            index: self.index << 1,
        }
    }

    pub fn right(&self) -> NodeId {
        NodeId {
            level: self.level + 1,
            index: (self.index << 1) | 1,
        }
    }

    pub fn children(&self) -> [NodeId; 2] {
        [self.left(), self.right()]
    }

    pub fn parent(&self) -> Option<NodeId> {
        (self.level > 0).then(|| NodeId {
            level: self.level - 1,
            index: self.index >> 1,
        })
    }

    pub fn is_left_child(&self) -> bool {
        self.level > 0 && self.index & 1 == 0
    }

    /// The ancestor at `level` (itself when `level == self.level`).
    pub fn ancestor(&self, level: u32) -> NodeId {
        assert!(level <= self.level, "ancestor level below node level");
        NodeId {
            level,
            index: self.index >> (self.level - level),
        }
    }

    /// Whether `other` lies in the subtree rooted here.
    pub fn contains(&self, other: &NodeId) -> bool {
        other.level >= self.level && other.ancestor(self.level) == *self
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.level, self.index)
    }
}

/// Interval covered by `id`. Nominally half-open; the rightmost node at each
/// level is closed at `hi`.
pub fn node_interval(id: NodeId, domain: &Domain) -> (f64, f64) {
    let w = domain.width() / (1u64 << id.level) as f64;
    let lo = domain.lo + id.index as f64 * w;
    let hi = if id.index + 1 == 1u64 << id.level {
        domain.hi
    } else {
        domain.lo + (id.index + 1) as f64 * w
    };
    (lo, hi)
}

/// The level-`level` node whose interval contains `x`.
pub fn locate(x: f64, level: u32, domain: &Domain) -> Result<NodeId> {
    domain.check(x)?;
    if level > MAX_DEPTH {
        return Err(Error::InvalidDepth {
            depth: level,
            max: MAX_DEPTH,
        });
    }
    Ok(NodeId {
        level,
        index: domain.cell_index(x, level),
    })
}

fn check_depth(depth: u32) -> Result<()> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::InvalidDepth {
            depth,
            max: MAX_DEPTH,
        });
    }
    Ok(())
}

/// Observation counts on the partition tree truncated at `max_depth`.
///
/// Only nodes holding at least one point are stored; every other node has
/// count zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CountedTree {
    domain: Domain,
    max_depth: u32,
    counts: HashMap<NodeId, u64>,
    n_total: u64,
}

/// Routes every datum down to `max_depth` and tallies the count of each node.
pub fn build_tree(data: &[f64], domain: Domain, max_depth: u32) -> Result<CountedTree> {
    check_depth(max_depth)?;
    let mut counts: HashMap<NodeId, u64> = HashMap::new();
    for &x in data {
        domain.check(x)?;
        let leaf = domain.cell_index(x, max_depth);
        for level in 0..=max_depth {
            let id = NodeId {
                level,
                index: leaf >> (max_depth - level),
            };
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    Ok(CountedTree {
        domain,
        max_depth,
        counts,
        n_total: data.len() as u64,
    })
}

impl CountedTree {
    /// Rebuilds a tree from sparse `(node, count)` entries, checking that
    /// every stored count is positive, every non-root stored node has a
    /// stored parent, and every internal count equals the sum of its children.
    pub fn from_counts(
        domain: Domain,
        max_depth: u32,
        entries: impl IntoIterator<Item = (NodeId, u64)>,
    ) -> Result<Self> {
        check_depth(max_depth)?;
        let mut counts = HashMap::new();
        for (id, n) in entries {
            if id.level > max_depth {
                return Err(Error::InconsistentCounts {
                    node: id,
                    detail: format!("level exceeds depth {max_depth}"),
                });
            }
            if n == 0 {
                continue;
            }
            if counts.insert(id, n).is_some() {
                return Err(Error::InconsistentCounts {
                    node: id,
                    detail: "duplicate entry".into(),
                });
            }
        }
        let n_total = counts.get(&NodeId::ROOT).copied().unwrap_or(0);
        for (&id, &n) in &counts {
            if let Some(parent) = id.parent() {
                if !counts.contains_key(&parent) {
                    return Err(Error::InconsistentCounts {
                        node: id,
                        detail: "parent has no points".into(),
                    });
                }
            }
            if id.level < max_depth {
                let sum = counts.get(&id.left()).copied().unwrap_or(0)
                    + counts.get(&id.right()).copied().unwrap_or(0);
                if sum != n {
                    return Err(Error::InconsistentCounts {
                        node: id,
                        detail: format!("count {n} but children sum to {sum}"),
                    });
                }
            }
        }
        Ok(Self {
            domain,
            max_depth,
            counts,
            n_total,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    pub fn count(&self, id: NodeId) -> u64 {
        self.counts.get(&id).copied().unwrap_or(0)
    }

    /// Left/right child counts of `id`.
    pub fn split(&self, id: NodeId) -> (u64, u64) {
        (self.count(id.left()), self.count(id.right()))
    }

    /// Stored nodes (all with positive count), in no particular order.
    pub fn nonempty_nodes(&self) -> impl Iterator<Item = (NodeId, u64)> + '_ {
        self.counts.iter().map(|(&id, &n)| (id, n))
    }

    pub fn num_nonempty(&self) -> usize {
        self.counts.len()
    }

    pub fn interval(&self, id: NodeId) -> (f64, f64) {
        node_interval(id, &self.domain)
    }

    pub fn locate(&self, x: f64, level: u32) -> Result<NodeId> {
        locate(x, level, &self.domain)
    }

    /// Leaf at `max_depth` holding `x`.
    pub fn leaf_of(&self, x: f64) -> Result<NodeId> {
        locate(x, self.max_depth, &self.domain)
    }
}
