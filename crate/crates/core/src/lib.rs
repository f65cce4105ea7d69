//! Density estimation with the Markov adaptive Polya tree.
//!
//! Data on an interval are counted on a dyadic partition tree. Each split
//! carries a latent shrinkage state; states follow a Markov process down the
//! tree that can only move toward stronger shrinkage. The marginal
//! likelihood, the posterior over states, posterior draws and the posterior
//! predictive density are all computed exactly by tree recursions.
//!
//! ```
//! use mapt::{build_tree, DensityEstimate, Domain, HyperParams};
//!
//! let data = [0.12, 0.15, 0.33, 0.34, 0.35, 0.8];
//! let tree = build_tree(&data, Domain::unit(), 8).unwrap();
//! let hp = HyperParams::from_settings(
//!     Domain::unit(),
//!     8,
//!     Default::default(),
//!     &Default::default(),
//! )
//! .unwrap();
//! let est = DensityEstimate::fit(tree, hp).unwrap();
//! assert!(est.ppd(0.34).unwrap() > est.ppd(0.6).unwrap());
//! ```

// `!(x > 0.0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod bench;
pub mod engine;
pub mod error;
pub mod io;
pub mod likelihood;
pub mod partition;
pub mod prior;
pub mod special;

pub use baseline::{pt_fit, pt_fit_tree, pt_ppd, Alpha, PtFit, PtNode, PtSpec};
pub use engine::{
    backward, empirical_bayes, empirical_bayes_from_data, forward, log_marginal, ppd,
    sample_posterior, DensityEstimate, ForwardTable, PosteriorDraw, PosteriorTree, Tuning,
};
pub use error::{Error, Result};
pub use likelihood::{
    log_m, log_m_component, posterior_nu_weights, Precision, SplitCounts, StateComponent,
};
pub use partition::{build_tree, locate, node_interval, CountedTree, Domain, NodeId};
pub use prior::{
    BaseMeasure, HyperParams, Kernel, PriorSettings, TransitionMatrix, TransitionSpec,
};
pub use special::{log_gamma, log_sum_exp};
