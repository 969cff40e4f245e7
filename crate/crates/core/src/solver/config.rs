use std::fmt;
use std::str::FromStr;

use crate::sparse::FactorStrategy;

use super::SolverError;

/// How the damping μ_k is chosen from the current norms and ℓ_k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MuRule {
    /// μ = max(1, ℓ‖R‖).
    #[default]
    Residual,
    /// μ = 1 + ((1+b)²/(1−b)) · max(â₀, â₁, â₂, â₃), see [`compute_mu`](super::compute_mu).
    Algebraic,
}

impl fmt::Display for MuRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MuRule::Residual => "residual",
            MuRule::Algebraic => "algebraic",
        })
    }
}

impl FromStr for MuRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "residual" => Ok(MuRule::Residual),
            "algebraic" => Ok(MuRule::Algebraic),
            _ => Err(format!("unknown mu rule `{s}` (expected `residual` or `algebraic`)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Number of subsets; 1 gives classical LM.
    pub k: usize,
    /// Bound on the correction: ‖βB‖ ≤ bμ/(‖H‖+μ).
    pub b: f64,
    /// Armijo constant.
    pub c: f64,
    /// Model-agreement threshold for shrinking ℓ.
    pub eta: f64,
    pub ell0: f64,
    pub ell_min: f64,
    pub max_iters: usize,
    pub max_backtracks: usize,
    /// Seed for partitioning and fill-reducing orderings.
    pub seed: u64,
    pub mu_rule: MuRule,
    /// Force β = 0 (no right-hand-side correction).
    pub beta_zero: bool,
    /// Compute the linear-system relative residual ρ every iteration.
    pub diagnostics: bool,
    pub factor: FactorStrategy,
    /// Re-derive JᵀJ independently every iteration and compare with H + B.
    pub check_assembly: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            k: 1,
            b: 0.8,
            c: 1e-4,
            eta: 0.25,
            ell0: 1.0,
            ell_min: 1e-4,
            max_iters: 200,
            max_backtracks: 60,
            seed: 0,
            mu_rule: MuRule::default(),
            beta_zero: false,
            diagnostics: false,
            factor: FactorStrategy::default(),
            check_assembly: cfg!(debug_assertions),
        }
    }
}

impl SolverConfig {
    pub fn with_k(k: usize) -> Self {
        Self { k, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        if self.k == 0 {
            return bad("K must be at least 1".into());
        }
        if !(self.b > 0.0 && self.b < 1.0) {
            return bad(format!("b must lie in (0, 1), got {}", self.b));
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return bad(format!("c must lie in (0, 1), got {}", self.c));
        }
        if !(0.0..1.0).contains(&self.eta) {
            return bad(format!("eta must lie in [0, 1), got {}", self.eta));
        }
        if !(self.ell_min > 0.0 && self.ell_min < self.ell0 && self.ell0.is_finite()) {
            return bad(format!(
                "need 0 < ell_min < ell0, got ell_min={} ell0={}",
                self.ell_min, self.ell0
            ));
        }
        Ok(())
    }
}
