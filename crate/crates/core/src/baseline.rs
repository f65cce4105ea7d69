//! The standard Polya tree with fixed per-level Beta precisions.
//!
//! Levels in `alpha` are counted from 1 at the root split, so the common
//! `Beta(k^2, k^2)` choice gives the root precision 2, its children 8, and
//! so on.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::partition::{build_tree, locate, node_interval, CountedTree, Domain, NodeId};
use crate::prior::{theta0_for, BaseMeasure};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    /// `alpha(k) = k^2`
    LevelSquared,
    Constant(f64),
}

impl Alpha {
    pub fn at(&self, level: u32) -> f64 {
        match self {
            Alpha::LevelSquared => f64::from(level) * f64::from(level),
            Alpha::Constant(c) => *c,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PtSpec {
    pub alpha: Alpha,
    pub base: BaseMeasure,
    pub max_depth: u32,
}

impl PtSpec {
    pub fn level_squared(max_depth: u32) -> Self {
        Self {
            alpha: Alpha::LevelSquared,
            base: BaseMeasure::Uniform,
            max_depth,
        }
    }

    /// Beta precision `nu = alpha_l + alpha_r` of `node`'s split.
    pub fn precision(&self, node: NodeId) -> f64 {
        2.0 * self.alpha.at(node.level() + 1)
    }
}

/// Posterior Beta mean and precision of one split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtNode {
    pub theta: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PtFit {
    spec: PtSpec,
    domain: Domain,
    nodes: HashMap<NodeId, PtNode>,
}

pub fn pt_fit(data: &[f64], spec: &PtSpec, domain: Domain) -> Result<PtFit> {
    let tree = build_tree(data, domain, spec.max_depth)?;
    pt_fit_tree(&tree, spec)
}

/// Conjugate update `theta~ = (theta0 nu + n_l) / (nu + n)`, `nu~ = nu + n` on
/// every node holding data.
pub fn pt_fit_tree(tree: &CountedTree, spec: &PtSpec) -> Result<PtFit> {
    if tree.max_depth() != spec.max_depth {
        return Err(Error::Mismatch(format!(
            "tree depth {} vs baseline depth {}",
            tree.max_depth(),
            spec.max_depth
        )));
    }
    let domain = *tree.domain();
    spec.base.validate(&domain)?;
    spec.base.validate_alignment(&domain, spec.max_depth)?;
    for level in 1..=spec.max_depth {
        let a = spec.alpha.at(level);
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidHyperParams(format!(
                "alpha({level}) = {a} must be positive and finite"
            )));
        }
    }
    let mut nodes = HashMap::new();
    for (id, n) in tree.nonempty_nodes() {
        if id.level() >= spec.max_depth {
            continue;
        }
        let theta0 = theta0_for(id, &spec.base, &domain)?;
        let nu = spec.precision(id);
        let (nl, _) = tree.split(id);
        nodes.insert(
            id,
            PtNode {
                theta: (theta0 * nu + nl as f64) / (nu + n as f64),
                nu: nu + n as f64,
            },
        );
    }
    Ok(PtFit {
        spec: spec.clone(),
        domain,
        nodes,
    })
}

impl PtFit {
    /// Posterior split parameters; the prior ones where there is no data.
    pub fn node(&self, id: NodeId) -> PtNode {
        self.nodes.get(&id).copied().unwrap_or_else(|| PtNode {
            theta: theta0_for(id, &self.spec.base, &self.domain)
                .expect("base validated at fit time"),
            nu: self.spec.precision(id),
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn max_depth(&self) -> u32 {
        self.spec.max_depth
    }

    fn leaf_density(&self, leaf: NodeId) -> f64 {
        let mut mass = 1.0;
        for level in 0..leaf.level() {
            let theta = self.node(leaf.ancestor(level)).theta;
            mass *= if leaf.ancestor(level + 1).is_left_child() {
                theta
            } else {
                1.0 - theta
            };
        }
        let (a, b) = node_interval(leaf, &self.domain);
        mass / (b - a)
    }

    pub fn leaf_densities(&self) -> Vec<f64> {
        let depth = self.spec.max_depth;
        (0..1u64 << depth)
            .map(|m| self.leaf_density(NodeId::new(depth, m).expect("index below 2^depth")))
            .collect()
    }
}

/// Posterior mean density at `x`.
pub fn pt_ppd(fit: &PtFit, x: f64) -> Result<f64> {
    let leaf = locate(x, fit.spec.max_depth, &fit.domain)?;
    Ok(fit.leaf_density(leaf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_data_keeps_prior_means() {
        let fit = pt_fit(&[], &PtSpec::level_squared(5), Domain::unit()).unwrap();
        assert_eq!(fit.node(NodeId::ROOT).theta, 0.5);
        for x in [0.0, 0.13, 0.5, 0.99, 1.0] {
            assert!((pt_ppd(&fit, x).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_average_update() {
        // root split: nu = 2 * 1^2, three points left and one right
        let fit = pt_fit(
            &[0.1, 0.2, 0.3, 0.8],
            &PtSpec::level_squared(3),
            Domain::unit(),
        )
        .unwrap();
        let root = fit.node(NodeId::ROOT);
        assert_eq!(root.theta, 4.0 / 6.0);
        assert_eq!(root.nu, 6.0);
    }

    #[test]
    fn huge_precision_recovers_prior_mean() {
        let spec = PtSpec {
            alpha: Alpha::Constant(1e9),
            base: BaseMeasure::Uniform,
            max_depth: 6,
        };
        let fit = pt_fit(&[0.1, 0.11, 0.12, 0.7], &spec, Domain::unit()).unwrap();
        assert!((fit.node(NodeId::ROOT).theta - 0.5).abs() < 1e-8);
        for x in [0.05, 0.11, 0.5, 0.7] {
            assert!((pt_ppd(&fit, x).unwrap() - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn leaf_sum_is_one() {
        let data: Vec<f64> = (0..200).map(|k| (k as f64 * 0.618).fract()).collect();
        let d = Domain::new(-1.0, 4.0).unwrap();
        let scaled: Vec<f64> = data.iter().map(|x| -1.0 + 5.0 * x).collect();
        let fit = pt_fit(&scaled, &PtSpec::level_squared(8), d).unwrap();
        let width = 5.0 / 256.0;
        let total: f64 = fit.leaf_densities().iter().map(|p| p * width).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_positive_alpha() {
        let spec = PtSpec {
            alpha: Alpha::Constant(0.0),
            base: BaseMeasure::Uniform,
            max_depth: 3,
        };
        assert!(pt_fit(&[0.5], &spec, Domain::unit()).is_err());
    }
}
