//! Posterior Markov-tree parameters over shrinkage states.

use std::collections::HashMap;

use crate::engine::forward::ForwardTable;
use crate::error::Result;
use crate::partition::{CountedTree, NodeId};
use crate::prior::{HyperParams, TransitionMatrix};

/// Posterior initial probabilities and per-node transition matrices.
///
/// Only recursed nodes carry their own matrix; every other node keeps the
/// prior transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTree {
    states: usize,
    init: Vec<f64>,
    trans: HashMap<NodeId, Vec<f64>>,
    prior: TransitionMatrix,
}

impl PosteriorTree {
    pub fn init(&self) -> &[f64] {
        &self.init
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    /// Row `from` of the posterior transition matrix into `node`.
    pub fn row(&self, node: NodeId, from: usize) -> &[f64] {
        match self.trans.get(&node) {
            Some(m) => &m[from * self.states..(from + 1) * self.states],
            None => self.prior.row(from),
        }
    }

    pub fn matrix(&self, node: NodeId) -> Vec<Vec<f64>> {
        (0..self.states)
            .map(|i| self.row(node, i).to_vec())
            .collect()
    }

    /// Whether `node` has a posterior matrix different from the prior one.
    pub fn is_updated(&self, node: NodeId) -> bool {
        self.trans.contains_key(&node)
    }

    /// Marginal posterior state probabilities at `node`, propagated down
    /// from the root.
    pub fn marginal(&self, node: NodeId) -> Vec<f64> {
        let mut probs = self.init.clone();
        for level in 1..=node.level() {
            let at = node.ancestor(level);
            let mut next = vec![0.0; self.states];
            for (i, &p) in probs.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (j, &t) in self.row(at, i).iter().enumerate() {
                    next[j] += p * t;
                }
            }
            probs = next;
        }
        probs
    }
}

fn normalize(row: &mut [f64]) {
    let total: f64 = row.iter().sum();
    if total > 0.0 {
        row.iter_mut().for_each(|p| *p /= total);
    }
}

/// Posterior initial probabilities `init_i M^i xi_l(i) xi_r(i) / xi_root` and
/// transitions `gamma_ij M^j xi_l(j) xi_r(j) / xi_A(i)`.
pub fn backward(tree: &CountedTree, hp: &HyperParams, fwd: &ForwardTable) -> Result<PosteriorTree> {
    crate::engine::forward::check_compatible(tree, hp)?;
    let s = hp.num_states();
    let prior = hp.transition().clone();
    let mut init = hp.init_probs().to_vec();
    let mut trans = HashMap::with_capacity(fwd.skel.nodes.len());
    for (j, node) in fwd.skel.nodes.iter().enumerate() {
        let inner = fwd.inner_row(j);
        if node.id == NodeId::ROOT {
            let root = fwd.log_marginal();
            for (i, p) in init.iter_mut().enumerate() {
                *p *= (inner[i] - root).exp();
            }
            normalize(&mut init);
            continue;
        }
        let xi = fwd.xi_row(j);
        let mut m = vec![0.0; s * s];
        for i in 0..s {
            let row = &mut m[i * s..(i + 1) * s];
            for k in i..s {
                let g = prior.get(i, k);
                if g > 0.0 {
                    row[k] = g * (inner[k] - xi[i]).exp();
                }
            }
            normalize(row);
        }
        trans.insert(node.id, m);
    }
    Ok(PosteriorTree {
        states: s,
        init,
        trans,
        prior,
    })
}
