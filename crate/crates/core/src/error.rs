use thiserror::Error;

use crate::problems::SplitPoint;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite evaluation: {0}")]
    NonFinite(String),

    #[error("numerically singular system (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        best: Box<SplitPoint>,
    },

    #[error("{what}: discrepancy {discrepancy:.3e} exceeds tolerance {tolerance:.3e}")]
    Consistency {
        what: &'static str,
        discrepancy: f64,
        tolerance: f64,
    },

    #[error("problem does not declare the constant `{0}`")]
    MissingConstant(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
