//! L1 distance to a scenario's true density by a midpoint Riemann sum.

use std::sync::OnceLock;

use crate::bench::scenario::Scenario;
use crate::error::{Error, Result};

/// `2^17` cells: a multiple of `2^12`, so each cell sits inside one depth-12
/// leaf.
pub const DEFAULT_GRID_SIZE: usize = 1 << 17;

static TRUTH: [OnceLock<Vec<f64>>; 5] = [const { OnceLock::new() }; 5];

fn midpoint(k: usize, grid_size: usize) -> f64 {
    (k as f64 + 0.5) / grid_size as f64
}

fn truth_grid(scenario: &Scenario, grid_size: usize) -> Vec<f64> {
    (0..grid_size)
        .map(|k| scenario.pdf(midpoint(k, grid_size)))
        .collect()
}

/// `sum_k |f_hat(x_k) - f0(x_k)| / grid_size` over the cell midpoints of
/// `[0, 1]`.
pub fn l1_loss<F: Fn(f64) -> f64>(f_hat: F, id: u8, grid_size: usize) -> Result<f64> {
    if grid_size == 0 {
        return Err(Error::Config("grid size must be at least 1".into()));
    }
    let scenario = Scenario::get(id)?;
    let sum = |truth: &[f64]| -> f64 {
        truth
            .iter()
            .enumerate()
            .map(|(k, &f0)| (f_hat(midpoint(k, grid_size)) - f0).abs())
            .sum::<f64>()
    };
    let total = if grid_size == DEFAULT_GRID_SIZE {
        let truth = TRUTH[usize::from(id) - 1].get_or_init(|| truth_grid(&scenario, grid_size));
        sum(truth)
    } else {
        sum(&truth_grid(&scenario, grid_size))
    };
    Ok(total / grid_size as f64)
}

/// [`l1_loss`] for an estimate that is constant on each of `leaves.len()`
/// equal cells of `[0, 1]`.
pub fn l1_loss_piecewise(leaves: &[f64], id: u8, grid_size: usize) -> Result<f64> {
    let m = leaves.len();
    if m == 0 || !grid_size.is_multiple_of(m) {
        return Err(Error::Config(format!(
            "grid size {grid_size} does not refine {m} leaves"
        )));
    }
    let per_leaf = grid_size / m;
    // cell k lies in leaf k / per_leaf; recover k from the midpoint exactly
    l1_loss(
        |x| leaves[((x * grid_size as f64) as usize / per_leaf).min(m - 1)],
        id,
        grid_size,
    )
}
