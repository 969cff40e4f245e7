//! Two-dimensional network adjustment: observation types with weighted
//! residuals and analytic Jacobian rows, problems, a synthetic generator and
//! a text file format.

mod generator;
mod io;
mod observation;
mod problem;

pub use generator::{generate_problem, grid_side, precise_count, GeneratorConfig, MIN_POINTS};
pub use io::{format_problem, parse_problem, read_problem, write_problem};
pub use observation::{
    angle_at, jacobian_row, raw_residual, signed_line_distance, weighted_residual, wrap_angle, Degenerate,
    JacobianRow, Observation, ObservationKind, MIN_LENGTH,
};
pub use problem::Problem;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("observation {index} ({kind}) is degenerate: {reason}")]
    Degenerate {
        index: usize,
        kind: ObservationKind,
        reason: &'static str,
    },
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("average degree stuck at {degree:.3} after {attempts} attempts")]
    DegreeUnreachable { attempts: usize, degree: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[cfg(test)]
mod tests;
