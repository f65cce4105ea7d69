//! Bottom-up summation of subtree marginal likelihoods.
//!
//! `xi_A(i)` is the marginal likelihood of the points in `A` under the model
//! restricted to `A`, given the parent's shrinkage state is `i`. Nodes with
//! at most one point, and nodes at the truncation depth, have a closed form
//! that does not depend on `i`; everything above them is recursed.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::likelihood::{log_m_unchecked, SplitCounts, StateComponent};
use crate::partition::{CountedTree, NodeId};
use crate::prior::{BaseMeasure, HyperParams, TransitionMatrix};
use crate::special::log_sum_exp;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Child {
    Internal(usize),
    Frontier(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct InternalNode {
    pub id: NodeId,
    pub counts: SplitCounts,
    pub theta0: f64,
    pub left: Child,
    pub right: Child,
}

/// Nodes the recursion visits, in post-order (children before parents).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Skeleton {
    pub nodes: Vec<InternalNode>,
    pub index: HashMap<NodeId, usize>,
    /// Closed-form `ln xi` of every frontier node holding at least one point.
    pub frontier: HashMap<NodeId, f64>,
    /// Set when the root itself is a frontier node.
    pub root_frontier: Option<f64>,
}

/// `ln q0(x | A)` summed over the points of a frontier node.
///
/// `Q0` is constant on every depth-`K` cell, so `q0(x | leaf) = 1 / |leaf|`
/// and a single point's value only needs its leaf.
pub(crate) fn frontier_log_xi(tree: &CountedTree, base: &BaseMeasure, node: NodeId) -> f64 {
    let n = tree.count(node);
    if n == 0 {
        return 0.0;
    }
    let domain = tree.domain();
    let depth = tree.max_depth();
    let log_width = |id: NodeId| domain.width().ln() - id.level() as f64 * std::f64::consts::LN_2;
    if node.level() == depth || matches!(base, BaseMeasure::Uniform) {
        return -(n as f64) * log_width(node);
    }
    debug_assert_eq!(n, 1, "frontier nodes above the depth limit hold one point");
    let mut leaf = node;
    while leaf.level() < depth {
        leaf = if tree.count(leaf.left()) > 0 {
            leaf.left()
        } else {
            leaf.right()
        };
    }
    -log_width(leaf) + base.log_mass(leaf, domain) - base.log_mass(node, domain)
}

impl Skeleton {
    pub fn build(tree: &CountedTree, hp: &HyperParams) -> Self {
        let mut skel = Skeleton {
            nodes: Vec::new(),
            index: HashMap::new(),
            frontier: HashMap::new(),
            root_frontier: None,
        };
        match skel.visit(tree, hp, NodeId::ROOT) {
            Child::Frontier(v) => skel.root_frontier = Some(v),
            Child::Internal(_) => {}
        }
        skel
    }

    fn visit(&mut self, tree: &CountedTree, hp: &HyperParams, id: NodeId) -> Child {
        let n = tree.count(id);
        if n <= 1 || id.level() == tree.max_depth() {
            let v = frontier_log_xi(tree, hp.base(), id);
            if n > 0 {
                self.frontier.insert(id, v);
            }
            return Child::Frontier(v);
        }
        let left = self.visit(tree, hp, id.left());
        let right = self.visit(tree, hp, id.right());
        let (nl, nr) = tree.split(id);
        let pos = self.nodes.len();
        self.nodes.push(InternalNode {
            id,
            counts: SplitCounts::new(nl, nr),
            theta0: hp.theta0(id),
            left,
            right,
        });
        self.index.insert(id, pos);
        Child::Internal(pos)
    }
}

/// `ln M(theta0, nu_h)` for every quadrature point of every component, and
/// the per-component averages, on every internal node.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LocalTable {
    pub states: usize,
    /// Start of each component's block within a node's quadrature row;
    /// `offsets[states]` is the row length.
    pub offsets: Vec<usize>,
    pub quad: Vec<f64>,
    pub comp: Vec<f64>,
}

impl LocalTable {
    pub fn compute(skel: &Skeleton, comps: &[StateComponent]) -> Self {
        let states = comps.len();
        let mut offsets = Vec::with_capacity(states + 1);
        let mut width = 0;
        for c in comps {
            offsets.push(width);
            width += c.quad_points().len();
        }
        offsets.push(width);
        let mut quad = Vec::with_capacity(skel.nodes.len() * width);
        let mut comp = Vec::with_capacity(skel.nodes.len() * states);
        for node in &skel.nodes {
            let start = quad.len();
            for c in comps {
                for &nu in c.quad_points() {
                    quad.push(log_m_unchecked(node.theta0, nu, node.counts));
                }
            }
            for s in 0..states {
                let block = &quad[start + offsets[s]..start + offsets[s + 1]];
                comp.push(average_log(block));
            }
        }
        Self {
            states,
            offsets,
            quad,
            comp,
        }
    }

    pub fn row_width(&self) -> usize {
        self.offsets[self.states]
    }

    pub fn quad_row(&self, node: usize) -> &[f64] {
        let w = self.row_width();
        &self.quad[node * w..(node + 1) * w]
    }

    pub fn comp_row(&self, node: usize) -> &[f64] {
        &self.comp[node * self.states..(node + 1) * self.states]
    }
}

/// `ln` of the arithmetic mean of `exp(block)`.
pub(crate) fn average_log(block: &[f64]) -> f64 {
    if block.len() == 1 {
        block[0]
    } else {
        log_sum_exp(block) - (block.len() as f64).ln()
    }
}

/// Log-space transition structure shared by every pass with the same
/// `(init, transition)`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LogTransitions {
    pub states: usize,
    pub init: Vec<f64>,
    pub trans: Vec<f64>,
}

impl LogTransitions {
    pub fn new(init: &[f64], trans: &TransitionMatrix) -> Self {
        Self {
            states: init.len(),
            init: init.iter().map(|p| p.ln()).collect(),
            trans: trans.rows().into_iter().flatten().map(f64::ln).collect(),
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.trans[i * self.states..(i + 1) * self.states]
    }

    /// `ln xi(i) = ln sum_{j >= i} gamma_ij exp(inner_j)` for every `i`, or
    /// the initial-probability mixture at the root.
    pub fn combine(&self, inner: &[f64], is_root: bool, out: &mut [f64]) {
        let s = self.states;
        let mut buf = [0.0f64; 64];
        if is_root {
            let terms = &mut buf[..s];
            for j in 0..s {
                terms[j] = self.init[j] + inner[j];
            }
            out.fill(log_sum_exp(terms));
            return;
        }
        for i in 0..s {
            let row = self.row(i);
            let terms = &mut buf[..s - i];
            for j in i..s {
                terms[j - i] = row[j] + inner[j];
            }
            out[i] = log_sum_exp(terms);
        }
    }
}

pub(crate) const MAX_STATES: usize = 64;

/// Per-node `ln xi` rows and the inner terms `ln M^i + ln xi_l(i) + ln xi_r(i)`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PassOutput {
    pub log_xi: Vec<f64>,
    pub inner: Vec<f64>,
    pub root: f64,
}

pub(crate) fn child_value(log_xi: &[f64], states: usize, child: Child, state: usize) -> f64 {
    match child {
        Child::Frontier(v) => v,
        Child::Internal(j) => log_xi[j * states + state],
    }
}

pub(crate) fn run_pass(skel: &Skeleton, local: &LocalTable, trans: &LogTransitions) -> PassOutput {
    let s = trans.states;
    let count = skel.nodes.len();
    let mut log_xi = vec![0.0; count * s];
    let mut inner = vec![0.0; count * s];
    for (j, node) in skel.nodes.iter().enumerate() {
        let comp = local.comp_row(j);
        for i in 0..s {
            inner[j * s + i] = comp[i]
                + child_value(&log_xi, s, node.left, i)
                + child_value(&log_xi, s, node.right, i);
        }
        let is_root = node.id == NodeId::ROOT;
        trans.combine(
            &inner[j * s..(j + 1) * s],
            is_root,
            &mut log_xi[j * s..(j + 1) * s],
        );
    }
    let root = match skel.root_frontier {
        Some(v) => v,
        None => log_xi[(count - 1) * s],
    };
    PassOutput {
        log_xi,
        inner,
        root,
    }
}

/// Result of the forward summation over one `(tree, hyperparameters)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTable {
    pub(crate) skel: Skeleton,
    pub(crate) local: LocalTable,
    pub(crate) pass: PassOutput,
    pub(crate) states: usize,
}

pub(crate) fn check_compatible(tree: &CountedTree, hp: &HyperParams) -> Result<()> {
    if tree.domain() != hp.domain() {
        return Err(Error::Mismatch(format!(
            "tree domain [{}, {}] vs prior domain [{}, {}]",
            tree.domain().lo(),
            tree.domain().hi(),
            hp.domain().lo(),
            hp.domain().hi()
        )));
    }
    if tree.max_depth() != hp.max_depth() {
        return Err(Error::Mismatch(format!(
            "tree depth {} vs prior depth {}",
            tree.max_depth(),
            hp.max_depth()
        )));
    }
    if hp.num_states() > MAX_STATES {
        return Err(Error::InvalidHyperParams(format!(
            "at most {MAX_STATES} shrinkage states are supported"
        )));
    }
    Ok(())
}

/// Forward summation.
pub fn forward(tree: &CountedTree, hp: &HyperParams) -> Result<ForwardTable> {
    check_compatible(tree, hp)?;
    let skel = Skeleton::build(tree, hp);
    let local = LocalTable::compute(&skel, hp.components());
    let trans = LogTransitions::new(hp.init_probs(), hp.transition());
    let pass = run_pass(&skel, &local, &trans);
    Ok(ForwardTable {
        skel,
        local,
        pass,
        states: hp.num_states(),
    })
}

impl ForwardTable {
    /// Overall log marginal likelihood.
    pub fn log_marginal(&self) -> f64 {
        self.pass.root
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    /// `ln xi_A(state)` for any node; zero for nodes without points.
    pub fn log_xi(&self, node: NodeId, state: usize) -> f64 {
        if node == NodeId::ROOT {
            return self.pass.root;
        }
        if let Some(&j) = self.skel.index.get(&node) {
            return self.pass.log_xi[j * self.states + state];
        }
        self.skel.frontier.get(&node).copied().unwrap_or(0.0)
    }

    /// Whether `node` was recursed (more than one point, above the depth limit).
    pub fn is_internal(&self, node: NodeId) -> bool {
        self.skel.index.contains_key(&node)
    }

    /// Nodes where the recursion stopped and at least one point remains.
    pub fn frontier(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.skel.frontier.iter().map(|(&id, &v)| (id, v))
    }

    /// Recursed nodes in post-order.
    pub fn internal_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.skel.nodes.iter().map(|n| n.id)
    }

    pub(crate) fn inner_row(&self, j: usize) -> &[f64] {
        &self.pass.inner[j * self.states..(j + 1) * self.states]
    }

    pub(crate) fn xi_row(&self, j: usize) -> &[f64] {
        &self.pass.log_xi[j * self.states..(j + 1) * self.states]
    }
}

/// Log marginal likelihood of the data under `hp`.
pub fn log_marginal(tree: &CountedTree, hp: &HyperParams) -> Result<f64> {
    Ok(forward(tree, hp)?.log_marginal())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{build_tree, Domain};
    use crate::prior::PriorSettings;

    fn hp(depth: u32, states: usize) -> HyperParams {
        HyperParams::from_settings(
            Domain::unit(),
            depth,
            BaseMeasure::Uniform,
            &PriorSettings {
                states,
                ..PriorSettings::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn empty_data_has_zero_log_marginal() {
        let tree = build_tree(&[], Domain::unit(), 4).unwrap();
        assert_eq!(log_marginal(&tree, &hp(4, 3)).unwrap(), 0.0);
    }

    #[test]
    fn single_point_is_prior_predictive() {
        let tree = build_tree(&[0.37], Domain::unit(), 4).unwrap();
        assert_eq!(log_marginal(&tree, &hp(4, 3)).unwrap(), 0.0);
        let d = Domain::new(-1.0, 4.0).unwrap();
        let tree = build_tree(&[0.37], d, 4).unwrap();
        let h = HyperParams::from_settings(d, 4, BaseMeasure::Uniform, &PriorSettings::default())
            .unwrap();
        let v = log_marginal(&tree, &h).unwrap();
        assert!((v + 5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_mismatched_depth() {
        let tree = build_tree(&[0.1, 0.2], Domain::unit(), 3).unwrap();
        assert!(forward(&tree, &hp(4, 2)).is_err());
    }

    #[test]
    fn root_value_is_shared_by_all_states() {
        let tree = build_tree(&[0.1, 0.2, 0.25, 0.8], Domain::unit(), 3).unwrap();
        let fwd = forward(&tree, &hp(3, 3)).unwrap();
        for s in 0..3 {
            assert_eq!(fwd.log_xi(NodeId::ROOT, s), fwd.log_marginal());
        }
    }

    #[test]
    fn frontier_value_for_piecewise_base_tracks_the_leaf() {
        let base = BaseMeasure::Piecewise {
            breakpoints: vec![0.5],
            masses: vec![0.25, 0.75],
        };
        let tree = build_tree(&[0.1], Domain::unit(), 3).unwrap();
        // q0(0.1) = 0.5 on [0, 0.5); the root holds all the mass
        let v = frontier_log_xi(&tree, &base, NodeId::ROOT);
        assert!((v - 0.5f64.ln()).abs() < 1e-15);
        let node = NodeId::new(1, 0).unwrap();
        let v = frontier_log_xi(&tree, &base, node);
        assert!((v - 2f64.ln()).abs() < 1e-15);
    }
}
