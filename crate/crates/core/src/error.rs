use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),

    #[error("kernel evaluated on the diagonal; use the assembled diagonal rule")]
    DiagonalRequested,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("lambda = {lambda} is within the multiplicity tolerance of eigenvalue #{index} = {nearest}")]
    SingularLambda {
        lambda: f64,
        nearest: f64,
        index: usize,
    },

    #[error("fixed-point iteration does not contract: |lambda| = {lambda} >= lambda_1 = {lambda_1}")]
    NotContractive { lambda: f64, lambda_1: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("input is not orthogonal to E (max |<f, phi_j>| = {0:e})")]
    NotOrthogonal(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad configuration rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidDomain(_)
                | Error::InvalidGrid(_)
                | Error::InvalidOperator(_)
                | Error::InvalidInput(_)
                | Error::OutsideDomain(_)
                | Error::GridMismatch(_)
                | Error::Unsupported(_)
                | Error::NotContractive { .. }
        )
    }
}
