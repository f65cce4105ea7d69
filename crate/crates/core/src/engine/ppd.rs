//! Posterior predictive density as a ratio of marginal likelihoods.
//!
//! Adding a pseudo-observation at `x` only changes counts along the
//! root-to-leaf path through `x`, so `xi` is recomputed on that path alone and
//! every off-path value is read from the forward table.

use crate::engine::forward::{average_log, forward, frontier_log_xi, ForwardTable, LogTransitions};
use crate::error::{Error, Result};
use crate::likelihood::{log_m_unchecked, Precision, SplitCounts};
use crate::partition::{locate, CountedTree, NodeId};
use crate::prior::{BaseMeasure, HyperParams};

/// A fitted model answering posterior predictive density queries.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    tree: CountedTree,
    hp: HyperParams,
    fwd: ForwardTable,
    log_marginal: f64,
    trans: LogTransitions,
}

/// Largest depth for which [`DensityEstimate::leaf_densities`] enumerates leaves.
pub const MAX_LEAF_ENUMERATION_DEPTH: u32 = 24;

impl DensityEstimate {
    pub fn fit(tree: CountedTree, hp: HyperParams) -> Result<Self> {
        let fwd = forward(&tree, &hp)?;
        Ok(Self::from_parts(tree, hp, fwd))
    }

    pub(crate) fn from_parts(tree: CountedTree, hp: HyperParams, fwd: ForwardTable) -> Self {
        let trans = LogTransitions::new(hp.init_probs(), hp.transition());
        let log_marginal = fwd.log_marginal();
        Self {
            tree,
            hp,
            fwd,
            log_marginal,
            trans,
        }
    }

    pub fn tree(&self) -> &CountedTree {
        &self.tree
    }

    pub fn hyper_params(&self) -> &HyperParams {
        &self.hp
    }

    pub fn forward_table(&self) -> &ForwardTable {
        &self.fwd
    }

    pub fn log_marginal(&self) -> f64 {
        self.log_marginal
    }

    /// Posterior predictive density at `x`.
    pub fn ppd(&self, x: f64) -> Result<f64> {
        Ok(self.log_ppd(x)?.exp())
    }

    pub fn log_ppd(&self, x: f64) -> Result<f64> {
        let leaf = locate(x, self.tree.max_depth(), self.tree.domain())?;
        Ok(self.augmented_root(leaf) - self.log_marginal)
    }

    /// Predictive density on every depth-`K` leaf, left to right. The
    /// predictive is constant on each leaf.
    pub fn leaf_densities(&self) -> Result<Vec<f64>> {
        let depth = self.tree.max_depth();
        if depth > MAX_LEAF_ENUMERATION_DEPTH {
            return Err(Error::InvalidDepth {
                depth,
                max: MAX_LEAF_ENUMERATION_DEPTH,
            });
        }
        Ok((0..1u64 << depth)
            .map(|m| {
                let leaf = NodeId::new(depth, m).expect("index below 2^depth");
                (self.augmented_root(leaf) - self.log_marginal).exp()
            })
            .collect())
    }

    fn log_width(&self, node: NodeId) -> f64 {
        self.tree.domain().width().ln() - node.level() as f64 * std::f64::consts::LN_2
    }

    /// `ln q0(x | A)` for `x` in `leaf`, a descendant of `node`.
    fn log_q0_conditional(&self, node: NodeId, leaf: NodeId) -> f64 {
        match self.hp.base() {
            BaseMeasure::Uniform => -self.log_width(node),
            base => {
                let d = self.tree.domain();
                -self.log_width(leaf) + base.log_mass(leaf, d) - base.log_mass(node, d)
            }
        }
    }

    /// Unaugmented `ln xi` of any node, including those below a frontier.
    fn off_path_log_xi(&self, node: NodeId, state: usize) -> f64 {
        if self.fwd.is_internal(node) {
            self.fwd.log_xi(node, state)
        } else {
            frontier_log_xi(&self.tree, self.hp.base(), node)
        }
    }

    /// `ln M^i` for every state after adding one point to `node`'s split.
    fn augmented_components(&self, node: NodeId, counts: SplitCounts, went_left: bool) -> Vec<f64> {
        let comps = self.hp.components();
        let theta0 = self.hp.theta0(node);
        let mut new_counts = counts;
        if went_left {
            new_counts.left += 1;
        } else {
            new_counts.right += 1;
        }
        let n = counts.total() as f64;
        let (hits, base_p) = if went_left {
            (counts.left as f64, theta0)
        } else {
            (counts.right as f64, 1.0 - theta0)
        };
        let mut out = Vec::with_capacity(comps.len());
        match self.fwd.skel.index.get(&node) {
            // Sequential predictive update of the cached per-point values.
            Some(&j) => {
                let row = self.fwd.local.quad_row(j);
                let offsets = &self.fwd.local.offsets;
                let mut block = Vec::new();
                for (s, c) in comps.iter().enumerate() {
                    block.clear();
                    for (h, &nu) in c.quad_points().iter().enumerate() {
                        let step = match nu {
                            Precision::Infinite => base_p.ln(),
                            Precision::Finite(v) => ((base_p * v + hits) / (v + n)).ln(),
                        };
                        block.push(row[offsets[s] + h] + step);
                    }
                    out.push(average_log(&block));
                }
            }
            None => {
                for c in comps {
                    let logs: Vec<f64> = c
                        .quad_points()
                        .iter()
                        .map(|&nu| log_m_unchecked(theta0, nu, new_counts))
                        .collect();
                    out.push(average_log(&logs));
                }
            }
        }
        out
    }

    /// `ln xi*_root` with one extra point in `leaf`.
    fn augmented_root(&self, leaf: NodeId) -> f64 {
        let depth = self.tree.max_depth();
        let states = self.hp.num_states();
        // deepest path node that is a closed-form frontier after augmentation
        let mut bottom = 0;
        while bottom < depth && self.tree.count(leaf.ancestor(bottom)) > 0 {
            bottom += 1;
        }
        let bottom_node = leaf.ancestor(bottom);
        let bottom_value = if self.tree.count(bottom_node) == 0 {
            self.log_q0_conditional(bottom_node, leaf)
        } else {
            self.off_path_log_xi(bottom_node, 0) - self.log_width(bottom_node)
        };
        let mut below = vec![bottom_value; states];
        let mut inner = vec![0.0; states];
        let mut xi = vec![0.0; states];
        for level in (0..bottom).rev() {
            let node = leaf.ancestor(level);
            let on_path = leaf.ancestor(level + 1);
            let went_left = on_path.is_left_child();
            let sibling = if went_left { node.right() } else { node.left() };
            let (nl, nr) = self.tree.split(node);
            let comps = self.augmented_components(node, SplitCounts::new(nl, nr), went_left);
            for i in 0..states {
                inner[i] = comps[i] + below[i] + self.off_path_log_xi(sibling, i);
            }
            self.trans.combine(&inner, node == NodeId::ROOT, &mut xi);
            std::mem::swap(&mut below, &mut xi);
        }
        below[0]
    }
}

/// Posterior predictive density of a fitted model at `x`.
pub fn ppd(est: &DensityEstimate, x: f64) -> Result<f64> {
    est.ppd(x)
}
