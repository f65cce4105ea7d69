//! Maximum marginal likelihood choice of the number of states and stickiness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::forward::{check_compatible, run_pass, LocalTable, LogTransitions, Skeleton};
use crate::error::{Error, Result};
use crate::partition::{build_tree, CountedTree, Domain};
use crate::prior::{BaseMeasure, HyperParams, PriorSettings};

/// `{2, ..., 11}`.
pub fn default_states_grid() -> Vec<usize> {
    (2..=11).collect()
}

/// `{0.0, 0.1, ..., 2.0}`.
pub fn default_beta_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub states: usize,
    pub beta: f64,
    pub log_marginal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tuning {
    pub states: usize,
    pub beta: f64,
    pub log_marginal: f64,
    /// Every grid point, states-major, both axes ascending.
    pub surface: Vec<SurfacePoint>,
}

impl Tuning {
    /// `template` with the selected `(states, beta)` substituted.
    pub fn settings(&self, template: &PriorSettings) -> PriorSettings {
        PriorSettings {
            states: self.states,
            beta: self.beta,
            ..*template
        }
    }
}

/// Evaluates the log marginal likelihood on the full grid and returns the
/// maximizer, breaking exact ties toward fewer states, then lower stickiness.
///
/// `template` supplies the precision range, quadrature size and kernel. The
/// per-node likelihood terms depend only on the number of states, so they are
/// computed once per state count and reused across the stickiness axis. State
/// counts run in parallel on the current rayon pool.
pub fn empirical_bayes(
    tree: &CountedTree,
    base: &BaseMeasure,
    template: &PriorSettings,
    states_grid: &[usize],
    beta_grid: &[f64],
) -> Result<Tuning> {
    if states_grid.is_empty() || beta_grid.is_empty() {
        return Err(Error::InvalidHyperParams(
            "tuning grids must be non-empty".into(),
        ));
    }
    let mut states_axis = states_grid.to_vec();
    states_axis.sort_unstable();
    states_axis.dedup();
    let mut beta_axis = beta_grid.to_vec();
    if beta_axis.iter().any(|b| b.is_nan()) {
        return Err(Error::InvalidHyperParams("NaN in stickiness grid".into()));
    }
    beta_axis.sort_by(f64::total_cmp);
    beta_axis.dedup();

    let domain = *tree.domain();
    let depth = tree.max_depth();
    let probe = HyperParams::from_settings(domain, depth, base.clone(), template)?;
    check_compatible(tree, &probe)?;
    let skel = Skeleton::build(tree, &probe);

    let rows: Vec<Vec<SurfacePoint>> = states_axis
        .par_iter()
        .map(|&states| -> Result<Vec<SurfacePoint>> {
            let first = PriorSettings {
                states,
                beta: beta_axis[0],
                ..*template
            };
            let hp = HyperParams::from_settings(domain, depth, base.clone(), &first)?;
            let local = LocalTable::compute(&skel, hp.components());
            beta_axis
                .iter()
                .map(|&beta| {
                    let hp = HyperParams::from_settings(
                        domain,
                        depth,
                        base.clone(),
                        &PriorSettings { beta, ..first },
                    )?;
                    let trans = LogTransitions::new(hp.init_probs(), hp.transition());
                    Ok(SurfacePoint {
                        states,
                        beta,
                        log_marginal: run_pass(&skel, &local, &trans).root,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let surface: Vec<SurfacePoint> = rows.into_iter().flatten().collect();
    let mut best = surface[0];
    for p in &surface[1..] {
        if p.log_marginal > best.log_marginal {
            best = *p;
        }
    }
    Ok(Tuning {
        states: best.states,
        beta: best.beta,
        log_marginal: best.log_marginal,
        surface,
    })
}

/// [`empirical_bayes`] straight from raw data with a uniform base measure.
pub fn empirical_bayes_from_data(
    data: &[f64],
    domain: Domain,
    max_depth: u32,
    states_grid: &[usize],
    beta_grid: &[f64],
) -> Result<Tuning> {
    let tree = build_tree(data, domain, max_depth)?;
    empirical_bayes(
        &tree,
        &BaseMeasure::Uniform,
        &PriorSettings::default(),
        states_grid,
        beta_grid,
    )
}
