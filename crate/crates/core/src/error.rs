use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive definite at point {point:?} (min eigenvalue {min_eig:e})")]
    NotPositiveDefinite { point: Vec<f64>, min_eig: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("quadratic form is not real: imaginary part {imag:e} exceeds {allowed:e}")]
    Symmetry { imag: f64, allowed: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("evaluation failed at point {point:?}{}: {source}", entry.map(|(j, k)| format!(" in entry ({j},{k})")).unwrap_or_default())]
    Eval {
        point: Vec<f64>,
        entry: Option<(usize, usize)>,
        source: EvalError,
    },

    #[error("entry ({}, {}): {source}", entry.0, entry.1)]
    EntryParse { entry: (usize, usize), source: ParseError },

    #[error("invalid metric spec: {0}")]
    Spec(String),

    #[error("no convergence after {doublings} doublings (last relative change {achieved:e}, target {target:e})")]
    NoConvergence {
        doublings: usize,
        achieved: f64,
        target: f64,
    },

    #[error("integral truncated: boundary mass ratio {ratio:e} exceeds {limit:e}; widen the integration box")]
    Truncation { ratio: f64, limit: f64 },

    #[error("precondition failed at {point:?}: {reason}")]
    Precondition { point: Vec<f64>, reason: String },
}
