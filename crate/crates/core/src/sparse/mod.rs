//! Sparse matrix storage, products, norm estimates and SPD block solves.

mod cg;
mod cholesky;
mod factor;
mod matrix;
mod norm;

pub use cg::{JacobiPcg, PcgOutcome};
pub use factor::{
    spd_factorize, spd_solve, FactorOptions, FactorPath, FactorStrategy, SpdFactor, CG_TOL, DENSE_MAX_DIM,
};
pub use matrix::{CsrBuilder, SparseMatrix};
pub use norm::{dot, frobenius_norm, norm2, power_iteration, power_iteration_from, spectral_norm_est, POWER_ITERS, POWER_TOL};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SparseError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),
    #[error("damping must be positive and finite, got {0}")]
    InvalidDamping(f64),
    #[error("factorization breakdown in block {block} at column {column}: pivot {pivot:e}")]
    FactorizationBreakdown { block: usize, column: usize, pivot: f64 },
    #[error("conjugate gradients in block {block} stopped after {iterations} iterations at relative residual {residual:e}")]
    CgNotConverged {
        block: usize,
        iterations: usize,
        residual: f64,
    },
    #[error("factor of block {block} was built for mu={factored}, used with mu={requested}")]
    StaleFactor { block: usize, factored: f64, requested: f64 },
}
