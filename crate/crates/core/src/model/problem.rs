use crate::sparse::{CsrBuilder, SparseMatrix};

use super::observation::{jacobian_row, weighted_residual, Degenerate, Observation};
use super::ModelError;

/// A 2-D network-adjustment problem. Variables are laid out as
/// `[x_0, y_0, x_1, y_1, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    n_points: usize,
    seed: Option<u64>,
    observations: Vec<Observation>,
    true_coords: Option<Vec<f64>>,
    initial_guess: Vec<f64>,
}

impl Problem {
    /// Validates point ids, sigmas and vector lengths.
    pub fn new(n_points: usize, observations: Vec<Observation>, initial_guess: Vec<f64>) -> Result<Self, ModelError> {
        if n_points == 0 {
            return Err(ModelError::Invalid("problem has no points".into()));
        }
        check_len("initial guess", 2 * n_points, initial_guess.len())?;
        for (j, obs) in observations.iter().enumerate() {
            validate_observation(obs, n_points).map_err(|e| ModelError::Invalid(format!("observation {j}: {e}")))?;
        }
        Ok(Self {
            n_points,
            seed: None,
            observations,
            true_coords: None,
            initial_guess,
        })
    }

    pub fn with_truth(mut self, true_coords: Vec<f64>) -> Result<Self, ModelError> {
        check_len("true coordinates", 2 * self.n_points, true_coords.len())?;
        self.true_coords = Some(true_coords);
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// N = 2 · n_points.
    pub fn n_variables(&self) -> usize {
        2 * self.n_points
    }

    /// m, the number of residuals.
    pub fn n_residuals(&self) -> usize {
        self.observations.len()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn true_coords(&self) -> Option<&[f64]> {
        self.true_coords.as_deref()
    }

    pub fn initial_guess(&self) -> &[f64] {
        &self.initial_guess
    }

    fn check_x(&self, x: &[f64]) -> Result<(), ModelError> {
        check_len("coordinate vector", self.n_variables(), x.len())
    }

    /// Weighted residual vector R(x), observation order.
    pub fn residuals(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_x(x)?;
        self.observations
            .iter()
            .enumerate()
            .map(|(j, obs)| weighted_residual(obs, x).map_err(|e| degenerate(j, e)))
            .collect()
    }

    /// F(x) = ½‖R(x)‖².
    pub fn objective(&self, x: &[f64]) -> Result<f64, ModelError> {
        Ok(half_norm_sq(&self.residuals(x)?))
    }

    /// Residuals and Jacobian with rows in observation order.
    pub fn evaluate(&self, x: &[f64]) -> Result<(Vec<f64>, SparseMatrix), ModelError> {
        self.evaluate_rows(x, 0..self.observations.len())
    }

    /// Residuals and Jacobian with row `i` taken from observation `order[i]`,
    /// e.g. [`Partition::grouped_row_order`](crate::partition::Partition::grouped_row_order).
    pub fn evaluate_ordered(&self, x: &[f64], order: &[usize]) -> Result<(Vec<f64>, SparseMatrix), ModelError> {
        if let Some(&bad) = order.iter().find(|&&j| j >= self.observations.len()) {
            return Err(ModelError::Invalid(format!("row order refers to observation {bad}")));
        }
        self.evaluate_rows(x, order.iter().copied())
    }

    fn evaluate_rows(
        &self,
        x: &[f64],
        rows: impl ExactSizeIterator<Item = usize>,
    ) -> Result<(Vec<f64>, SparseMatrix), ModelError> {
        self.check_x(x)?;
        let m = rows.len();
        let mut r = Vec::with_capacity(m);
        let mut jac = CsrBuilder::with_capacity(self.n_variables(), m, 6 * m);
        for j in rows {
            let obs = &self.observations[j];
            r.push(weighted_residual(obs, x).map_err(|e| degenerate(j, e))?);
            let row = jacobian_row(obs, x).map_err(|e| degenerate(j, e))?;
            for &(col, v) in row.entries() {
                jac.push(col, v);
            }
            jac.finish_row();
        }
        Ok((r, jac.build()))
    }
}

/// Point ids in range and distinct, sigma positive and finite.
pub(crate) fn validate_observation(obs: &Observation, n_points: usize) -> Result<(), String> {
    let ids = obs.point_ids();
    if let Some(&bad) = ids.iter().find(|&&p| p >= n_points) {
        return Err(format!("point {bad} out of range for {n_points} points"));
    }
    if (1..ids.len()).any(|a| ids[..a].contains(&ids[a])) {
        return Err("repeated point id".into());
    }
    if !(obs.sigma > 0.0 && obs.sigma.is_finite()) {
        return Err(format!("sigma must be positive, got {}", obs.sigma));
    }
    Ok(())
}

pub(crate) fn half_norm_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

fn degenerate(index: usize, e: Degenerate) -> ModelError {
    ModelError::Degenerate {
        index,
        kind: e.kind,
        reason: e.reason,
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), ModelError> {
    if expected == found {
        Ok(())
    } else {
        Err(ModelError::DimensionMismatch { what, expected, found })
    }
}
