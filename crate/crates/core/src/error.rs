use thiserror::Error;

/// Errors raised by the sampler and the post-processing routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The current chain state has zero prior density or zero kernel value.
    #[error("invalid chain state: {0}")]
    InvalidState(String),

    #[error("initialization failed after {attempts} attempts: {reason}")]
    Initialization { attempts: usize, reason: String },

    /// No sample has a positive correction weight at this tolerance.
    #[error("all correction weights are zero at epsilon = {epsilon}")]
    AllZeroWeights { epsilon: f64 },

    #[error("integrated autocorrelation is undefined for a constant series")]
    ConstantSeries,

    #[error("weighted design matrix is singular (condition ratio {ratio:e})")]
    SingularDesign { ratio: f64 },

    #[error("regression needs at least {needed} samples with positive weight, found {found}")]
    InsufficientSupport { needed: usize, found: usize },

    #[error("trace was recorded without {0}")]
    CaptureDisabled(&'static str),

    #[error("proposal covariance is not positive definite")]
    NotPositiveDefinite,

    #[error("quadrature did not converge: error estimate {error_estimate:e}")]
    Quadrature { error_estimate: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
