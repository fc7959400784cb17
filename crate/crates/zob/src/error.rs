use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input at coordinate {index}")]
    NonFiniteInput { index: usize },

    #[error("oracle returned a non-finite value at x = {x:?}")]
    OracleFailure { x: Vec<f64> },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid noise spec: {0}")]
    InvalidNoise(String),

    #[error("invalid smoothing radius {0}: must be strictly positive")]
    InvalidRadius(f64),

    #[error("invalid block: {0}")]
    InvalidBlock(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("radius schedule rejected: {0}")]
    RadiusCondition(String),

    #[error("metric unsupported: {0}")]
    UnsupportedMetric(String),

    #[error("inner solver stalled: residual {residual:.3e} after {iters} iterations")]
    InnerSolve { residual: f64, iters: usize },

    #[error("division domain: {0}")]
    DivisionDomain(String),

    #[error("at iteration {k}: {source}")]
    AtIteration {
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing fixture: {0}")]
    MissingFixture(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Wraps an error with the iteration index it occurred at.
    pub fn at_iteration(self, k: usize) -> Self {
        Error::AtIteration {
            k,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad user input (configs, parameters)
    /// rather than runtime failures. The CLI maps these to exit code 1.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidParameter(_)
                | Error::InvalidDimension(_)
                | Error::InvalidNoise(_)
                | Error::InvalidRadius(_)
                | Error::InvalidBlock(_)
                | Error::RadiusCondition(_)
                | Error::DimensionMismatch { .. }
                | Error::MissingFixture(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
