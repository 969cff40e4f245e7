use crate::model::{ModelError, Problem};

use super::PartitionError;

/// Where a residual lives after partitioning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualClass {
    /// Depends only on points of this subset (the set E_s).
    Internal(usize),
    /// Couples points of two or more subsets (the set Ê).
    Coupling,
}

/// A point partition together with the residual sets it induces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    k: usize,
    assignment: Vec<usize>,
    subset_sizes: Vec<usize>,
    internal_residuals: Vec<Vec<usize>>,
    coupling_residuals: Vec<usize>,
    classes: Vec<ResidualClass>,
}

impl Partition {
    /// The trivial partition: every point in subset 0, no coupling residuals.
    pub fn single(problem: &Problem) -> Self {
        classify_residuals(problem, &vec![0; problem.n_points()]).expect("single subset is always valid")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Subset of every point.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn subset_sizes(&self) -> &[usize] {
        &self.subset_sizes
    }

    pub fn internal_residuals(&self, s: usize) -> &[usize] {
        &self.internal_residuals[s]
    }

    pub fn coupling_residuals(&self) -> &[usize] {
        &self.coupling_residuals
    }

    /// Class of every residual, in observation order.
    pub fn residual_classes(&self) -> &[ResidualClass] {
        &self.classes
    }

    pub fn n_residuals(&self) -> usize {
        self.classes.len()
    }

    /// |Ê| / m.
    pub fn cut_fraction(&self) -> f64 {
        if self.classes.is_empty() {
            0.0
        } else {
            self.coupling_residuals.len() as f64 / self.classes.len() as f64
        }
    }

    /// Subset of every variable; both coordinates of a point share a subset.
    pub fn variable_labels(&self) -> Vec<usize> {
        self.assignment.iter().flat_map(|&s| [s, s]).collect()
    }

    /// Ascending variable indices of every subset.
    pub fn block_variables(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.k];
        for (p, &s) in self.assignment.iter().enumerate() {
            blocks[s].push(2 * p);
            blocks[s].push(2 * p + 1);
        }
        blocks
    }

    /// Ascending point indices of every subset.
    pub fn block_points(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.k];
        for (p, &s) in self.assignment.iter().enumerate() {
            blocks[s].push(p);
        }
        blocks
    }

    /// Residual indices grouped as E_1, ..., E_K, then Ê.
    pub fn grouped_row_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = self.internal_residuals.iter().flatten().copied().collect();
        order.extend_from_slice(&self.coupling_residuals);
        order
    }
}

/// Splits the residuals of `problem` into the internal sets E_s and the
/// coupling set Ê for the given point-to-subset assignment. The number of
/// subsets is `max(assignment) + 1`; every subset must be nonempty.
pub fn classify_residuals(problem: &Problem, assignment: &[usize]) -> Result<Partition, PartitionError> {
    if assignment.len() != problem.n_points() {
        return Err(PartitionError::AssignmentLength {
            expected: problem.n_points(),
            found: assignment.len(),
        });
    }
    let k = assignment.iter().max().map_or(1, |&m| m + 1);
    let mut subset_sizes = vec![0usize; k];
    for &s in assignment {
        subset_sizes[s] += 1;
    }
    if let Some(empty) = subset_sizes.iter().position(|&c| c == 0) {
        return Err(PartitionError::EmptySubset(empty));
    }
    let mut internal_residuals = vec![Vec::new(); k];
    let mut coupling_residuals = Vec::new();
    let mut classes = Vec::with_capacity(problem.observations().len());
    for (j, obs) in problem.observations().iter().enumerate() {
        let ids = obs.point_ids();
        let s = assignment[ids[0]];
        if ids.iter().all(|&p| assignment[p] == s) {
            internal_residuals[s].push(j);
            classes.push(ResidualClass::Internal(s));
        } else {
            coupling_residuals.push(j);
            classes.push(ResidualClass::Coupling);
        }
    }
    Ok(Partition {
        k,
        assignment: assignment.to_vec(),
        subset_sizes,
        internal_residuals,
        coupling_residuals,
        classes,
    })
}

/// Objective split F = Φ + Σ F_s at one point, plus partition quality figures.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionStats {
    pub k: usize,
    pub subset_sizes: Vec<usize>,
    pub internal_counts: Vec<usize>,
    pub coupling_count: usize,
    pub cut_fraction: f64,
    /// Φ(x) = ½‖ρ(x)‖² over the coupling residuals.
    pub phi: f64,
    /// F_s(x) over each internal set.
    pub subset_objectives: Vec<f64>,
    /// F(x) from the full residual vector.
    pub total_objective: f64,
    /// Largest subset size over the ideal n / K.
    pub max_balance: f64,
}

pub fn partition_stats(p: &Partition, problem: &Problem, x: &[f64]) -> Result<PartitionStats, ModelError> {
    let residuals = problem.residuals(x)?;
    let half_sq = |rows: &[usize]| 0.5 * rows.iter().fold(0.0, |acc, &j| acc + residuals[j] * residuals[j]);
    let subset_objectives = (0..p.k).map(|s| half_sq(&p.internal_residuals[s])).collect();
    let ideal = problem.n_points() as f64 / p.k as f64;
    Ok(PartitionStats {
        k: p.k,
        subset_sizes: p.subset_sizes.clone(),
        internal_counts: p.internal_residuals.iter().map(Vec::len).collect(),
        coupling_count: p.coupling_residuals.len(),
        cut_fraction: p.cut_fraction(),
        phi: half_sq(&p.coupling_residuals),
        subset_objectives,
        total_objective: 0.5 * residuals.iter().map(|r| r * r).sum::<f64>(),
        max_balance: p.subset_sizes.iter().copied().max().unwrap_or(0) as f64 / ideal,
    })
}
