use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input")]
    EmptyInput,

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("field has no GLS home: {0}")]
    NoGlsHome(String),

    #[error("p ln psi(p) is not convex near p = {p} (second difference {second_difference:e})")]
    NotConvex { p: f64, second_difference: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("covariance is not positive semi-definite (eigenvalue {0:e})")]
    NotPositiveSemiDefinite(f64),

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
