use thiserror::Error;

use crate::entanglement::LsDecomposition;

/// Errors raised across the chain/entanglement pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("chain of {n_sites} sites exceeds capacity of {max_sites} sites")]
    Capacity { n_sites: usize, max_sites: usize },

    #[error("no convergence after {iterations} iterations (best residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("site index out of range: ({i}, {j}) on a chain of {n_sites} sites")]
    SiteIndex { i: usize, j: usize, n_sites: usize },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("decomposition certificate violated: |C - (1-Lambda) C_e| = {gap:e}")]
    Certificate {
        best: Box<LsDecomposition>,
        gap: f64,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
