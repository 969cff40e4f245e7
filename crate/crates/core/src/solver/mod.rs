//! The splitted Levenberg-Marquardt iteration and its building blocks.
//!
//! Each iteration solves `(H + μI) d = (βB − I) g` block by block, where `H`
//! is the block diagonal of `JᵀJ` under the variable partition and `B` the
//! remaining coupling. With one block this is classical Levenberg-Marquardt.

mod blocks;
mod config;
mod run;
mod steps;

pub use blocks::{assemble_blocks, AssemblyPlan, BlockLayout, BlockSystem};
pub use config::{MuRule, SolverConfig};
pub use run::{
    solve, solve_problem, IterationRecord, SolveReport, SolveStatus, INVARIANT_SLACK, LOG_HEADER,
};
pub use steps::{
    compute_beta, compute_direction, compute_mu, line_search, linear_residual_rho, predicted_reduction,
    residual_fractions, stopping_met, update_ell, Correction, LineSearch, LineSearchFailure, BETA_DEGENERATE,
};

use thiserror::Error;

use crate::model::ModelError;
use crate::partition::PartitionError;
use crate::sparse::SparseError;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("partition does not match: expected {expected}, found {found}")]
    PartitionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}
