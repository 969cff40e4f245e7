//! Splitted Levenberg-Marquardt for sparse nonlinear least squares whose
//! variables split into nearly independent groups.
//!
//! The solver partitions the variable graph into `K` subsets, drops the
//! off-diagonal blocks of the Gauss-Newton matrix and solves `K` independent
//! damped systems per iteration, with a scalar correction of the right-hand
//! side standing in for the dropped coupling.

pub mod model;
pub mod partition;
pub mod solver;
pub mod sparse;

#[cfg(test)]
pub(crate) mod test_util;
