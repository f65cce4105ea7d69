//! Simulation study: test densities, L1 loss, and the repeated benchmark.

mod loss;
mod run;
mod scenario;

pub use loss::{l1_loss, l1_loss_piecewise, DEFAULT_GRID_SIZE};
pub use run::{
    replicate_seed, run_benchmark, BenchConfig, BenchResult, LossRecord, Method, SummaryRow,
    DEFAULT_REPLICATES, DEFAULT_SIZES,
};
pub use scenario::{scenario_pdf, scenario_sample, Dist, Scenario};
