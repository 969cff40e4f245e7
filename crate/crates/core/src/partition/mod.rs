//! Point graph, balanced k-way partitioning, and the induced split of the
//! residuals into internal sets E_s and the coupling set Ê.

mod bisect;
mod classify;
mod dissection;
mod graph;
mod kway;

pub use bisect::{bisect, BisectionTrace, SizeBounds, MAX_REFINE_PASSES};
pub use classify::{classify_residuals, partition_stats, Partition, PartitionStats, ResidualClass};
pub use dissection::nested_dissection;
pub use graph::{build_variable_graph, Graph};
pub use kway::{balance_bounds, partition_kway};

use thiserror::Error;

use crate::model::Problem;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("number of subsets must be at least 1")]
    ZeroParts,
    #[error("cannot split {nodes} nodes into {k} nonempty subsets")]
    TooManyParts { k: usize, nodes: usize },
    #[error("assignment covers {found} points, problem has {expected}")]
    AssignmentLength { expected: usize, found: usize },
    #[error("subset {0} is empty")]
    EmptySubset(usize),
}

/// Graph construction, k-way split and residual classification in one call.
pub fn partition_problem(problem: &Problem, k: usize, seed: u64) -> Result<Partition, PartitionError> {
    let graph = build_variable_graph(problem);
    let assignment = partition_kway(&graph, k, seed)?;
    classify_residuals(problem, &assignment)
}

#[cfg(test)]
mod tests;
