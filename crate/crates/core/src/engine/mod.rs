//! Exact posterior inference: forward summation, backward computation of the
//! posterior Markov tree over shrinkage states, joint posterior sampling,
//! posterior predictive densities, and empirical-Bayes tuning.

mod backward;
mod forward;
mod ppd;
mod sample;
mod tuning;

pub use backward::{backward, PosteriorTree};
pub use forward::{forward, log_marginal, ForwardTable};
pub use ppd::{ppd, DensityEstimate, MAX_LEAF_ENUMERATION_DEPTH};
pub use sample::{sample_posterior, PosteriorDraw};
pub use tuning::{
    default_beta_grid, default_states_grid, empirical_bayes, empirical_bayes_from_data,
    SurfacePoint, Tuning,
};
