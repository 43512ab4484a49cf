use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("wealth {w} outside grid range [0, {w_max}]")]
    OutOfRange { w: f64, w_max: f64 },

    #[error("grid mismatch between distribution and rate field")]
    GridMismatch,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("Gini estimate {raw} lies outside [0, 1] beyond tolerance")]
    GiniOutOfRange { raw: f64 },

    #[error("agent indices must differ (got {0} twice)")]
    SameAgent(usize),

    #[error("agent index {index} out of range for population {len}")]
    AgentIndex { index: usize, len: usize },

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("total wealth must be positive")]
    ZeroWealth,

    #[error("clipped mass {clipped:.3e} exceeds limit {limit:.3e} in one step")]
    ClipLimit { clipped: f64, limit: f64 },

    #[error("time step {dt:.3e} violates stability bound {bound:.3e}")]
    StabilityBound { dt: f64, bound: f64 },

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("insufficient tail data: {tail} effective samples above cutoff, need {need}")]
    InsufficientTail { tail: f64, need: f64 },

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
