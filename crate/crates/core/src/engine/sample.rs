//! Exact joint posterior draws of states, precisions and split probabilities.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::engine::backward::PosteriorTree;
use crate::engine::forward::check_compatible;
use crate::error::{Error, Result};
use crate::likelihood::{posterior_nu_weights, Precision, SplitCounts};
use crate::partition::{node_interval, CountedTree, NodeId};
use crate::prior::HyperParams;

/// One draw from the joint posterior.
///
/// Covers every node above the depth limit that holds at least one point.
/// Any other node carries no information from the data in a draw and its
/// split probability is reported as the prior mean.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PosteriorDraw {
    pub states: HashMap<NodeId, usize>,
    pub precisions: HashMap<NodeId, Precision>,
    pub pacs: HashMap<NodeId, f64>,
}

impl PosteriorDraw {
    pub fn pac(&self, node: NodeId, hp: &HyperParams) -> f64 {
        self.pacs
            .get(&node)
            .copied()
            .unwrap_or_else(|| hp.theta0(node))
    }

    /// Density of the sampled distribution at `x`.
    pub fn density(&self, x: f64, hp: &HyperParams) -> Result<f64> {
        let leaf = crate::partition::locate(x, hp.max_depth(), hp.domain())?;
        let mut mass = 1.0;
        for level in 0..leaf.level() {
            let node = leaf.ancestor(level);
            let theta = self.pac(node, hp);
            mass *= if leaf.ancestor(level + 1).is_left_child() {
                theta
            } else {
                1.0 - theta
            };
        }
        let (a, b) = node_interval(leaf, hp.domain());
        Ok(mass / (b - a))
    }
}

struct SampleSite {
    id: NodeId,
    parent: Option<usize>,
    counts: SplitCounts,
    theta0: f64,
    nu_weights: Vec<Vec<f64>>,
}

fn sites(tree: &CountedTree, hp: &HyperParams) -> Result<Vec<SampleSite>> {
    let mut out: Vec<SampleSite> = Vec::new();
    if tree.n_total() == 0 {
        return Ok(out);
    }
    let mut stack = vec![(NodeId::ROOT, None)];
    while let Some((id, parent)) = stack.pop() {
        if tree.count(id) == 0 || id.level() >= tree.max_depth() {
            continue;
        }
        let (nl, nr) = tree.split(id);
        let counts = SplitCounts::new(nl, nr);
        let theta0 = hp.theta0(id);
        let nu_weights = posterior_nu_weights(theta0, hp.components(), counts)?;
        let pos = out.len();
        out.push(SampleSite {
            id,
            parent,
            counts,
            theta0,
            nu_weights,
        });
        stack.push((id.right(), Some(pos)));
        stack.push((id.left(), Some(pos)));
    }
    Ok(out)
}

fn pick<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = k;
            if u < acc {
                return k;
            }
        }
    }
    last
}

/// Top-down draws: state from the posterior Markov tree, then the precision
/// from the chosen component's posterior quadrature weights, then the split
/// probability from its conjugate Beta. Uses a ChaCha8 stream seeded by `seed`.
pub fn sample_posterior(
    post: &PosteriorTree,
    hp: &HyperParams,
    tree: &CountedTree,
    seed: u64,
    n_draws: usize,
) -> Result<Vec<PosteriorDraw>> {
    check_compatible(tree, hp)?;
    if post.num_states() != hp.num_states() {
        return Err(Error::Mismatch(format!(
            "posterior has {} states, prior has {}",
            post.num_states(),
            hp.num_states()
        )));
    }
    let sites = sites(tree, hp)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(n_draws);
    let mut state_of = vec![0usize; sites.len()];
    for _ in 0..n_draws {
        let mut draw = PosteriorDraw::default();
        for (k, site) in sites.iter().enumerate() {
            let state = match site.parent {
                None => pick(&mut rng, post.init()),
                Some(p) => pick(&mut rng, post.row(site.id, state_of[p])),
            };
            state_of[k] = state;
            let comp = &hp.components()[state];
            let h = pick(&mut rng, &site.nu_weights[state]);
            let nu = comp.quad_points()[h];
            let theta = match nu {
                Precision::Infinite => site.theta0,
                Precision::Finite(v) => {
                    let a = site.theta0 * v + site.counts.left as f64;
                    let b = (1.0 - site.theta0) * v + site.counts.right as f64;
                    let beta = Beta::new(a, b)
                        .map_err(|e| Error::InvalidHyperParams(format!("Beta({a}, {b}): {e}")))?;
                    // tiny shape parameters can round a draw onto 0 or 1
                    beta.sample(&mut rng)
                        .clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
                }
            };
            draw.states.insert(site.id, state);
            draw.precisions.insert(site.id, nu);
            draw.pacs.insert(site.id, theta);
        }
        draws.push(draw);
    }
    Ok(draws)
}
