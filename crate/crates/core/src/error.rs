use thiserror::Error;

use crate::eigensolver::EigenSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("magnetization sector M_tot = {m_tot} is empty for L = {sites}")]
    EmptySector { sites: usize, m_tot: i32 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("operation expects a {expected} basis, got {got}")]
    SchemeMismatch {
        expected: crate::basis::Scheme,
        got: crate::basis::Scheme,
    },

    #[error("cannot restrict to an empty set of states")]
    EmptyKeep,

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid couplings: {0}")]
    InvalidCouplings(String),

    #[error("invalid solver configuration: {0}")]
    InvalidSolverConfig(String),

    #[error("Lanczos did not converge after {iterations} iterations (residuals {residuals:?})")]
    NotConverged {
        iterations: usize,
        residuals: Vec<f64>,
        best: Box<EigenSolution>,
    },

    #[error("ground vector has no weight outside the eliminated state")]
    DegenerateProjection,

    #[error("reference energy is zero; relative deviation undefined")]
    UndefinedReference,

    #[error("amplitude vector is not normalized (norm {norm})")]
    Unnormalized { norm: f64 },

    #[error("{path}:{line}: {msg}")]
    Config {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
