use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("point {point:?} lies outside the {region}")]
    OutsideDomain { point: Vec<f64>, region: &'static str },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("quadrature did not converge: error estimate {estimate:.3e} above tolerance {tol:.3e}")]
    QuadratureNotConverged { estimate: f64, tol: f64 },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("singular system (log10 |det| = {log10_abs_det:.2})")]
    Singular { log10_abs_det: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
