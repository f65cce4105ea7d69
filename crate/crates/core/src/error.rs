use thiserror::Error;

use crate::partition::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain [{lo}, {hi}]: endpoints must be finite with lo < hi")]
    InvalidDomain { lo: f64, hi: f64 },

    #[error("value {value} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("maximum depth must be between 1 and {max}, got {depth}")]
    InvalidDepth { depth: u32, max: u32 },

    #[error("log-gamma is undefined for x = {0}")]
    GammaDomain(f64),

    #[error("prior mean coefficient must lie strictly inside (0, 1), got {0}")]
    InvalidTheta0(f64),

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperParams(String),

    #[error("invalid base measure: {0}")]
    InvalidBase(String),

    #[error("tree and hyperparameters disagree: {0}")]
    Mismatch(String),

    #[error("inconsistent counts at node {node}: {detail}")]
    InconsistentCounts { node: NodeId, detail: String },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("malformed model document: {0}")]
    Model(String),

    #[error("malformed config: {0}")]
    Config(String),

    #[error("unknown scenario {0}; expected 1..=5")]
    UnknownScenario(u8),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
