use crate::sparse::{dot, norm2, SparseError, SparseMatrix};

use super::blocks::BlockSystem;
use super::SolverError;

/// Below this ‖u + v‖² the correction has no usable direction and β = 0.
pub const BETA_DEGENERATE: f64 = 1e-300;

/// Damping from the norm bounds and the Lipschitz estimate ℓ:
///
/// ```text
/// â₀ = (ℓ²/4)‖H‖‖J‖‖R‖
/// â₁ = (ℓ²/4)‖J‖‖R‖ + ℓ‖H‖‖J‖²‖R‖
/// â₂ = ‖H‖‖J‖² + ℓ‖H‖‖R‖ + ℓ‖J‖²‖R‖
/// â₃ = ‖J‖² + ℓ‖R‖
/// μ  = 1 + ((1+b)²/(1−b)) · max âᵢ
/// ```
pub fn compute_mu(ell: f64, norm_h: f64, norm_j: f64, norm_r: f64, b: f64) -> Result<f64, SolverError> {
    if !(b > 0.0 && b < 1.0) {
        return Err(SolverError::InvalidConfig(format!("b must lie in (0, 1), got {b}")));
    }
    let (h, j, r) = (norm_h, norm_j, norm_r);
    let j2 = j * j;
    let a0 = ell * ell / 4.0 * h * j * r;
    let a1 = ell * ell / 4.0 * j * r + ell * h * j2 * r;
    let a2 = h * j2 + ell * h * r + ell * j2 * r;
    let a3 = j2 + ell * r;
    let amax = a0.max(a1).max(a2).max(a3);
    Ok(1.0 + (1.0 + b) * (1.0 + b) / (1.0 - b) * amax)
}

/// Result of the right-hand-side correction step.
#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    /// β after clamping to ±βmax.
    pub beta: f64,
    /// The unconstrained minimizer (u+v)ᵀw / ‖u+v‖².
    pub beta_star: f64,
    pub beta_max: f64,
    /// 1 + |β|·‖B‖_F, an upper bound on ‖I − βB‖.
    pub gamma: f64,
    /// u = B g.
    pub u: Vec<f64>,
    /// ŵ = (H + μI)⁻¹ g, when it was computed.
    pub w_hat: Option<Vec<f64>>,
}

impl Correction {
    /// β = 0, γ = 1: no coupling or correction switched off.
    pub fn none(n: usize) -> Self {
        Self {
            beta: 0.0,
            beta_star: 0.0,
            beta_max: f64::INFINITY,
            gamma: 1.0,
            u: vec![0.0; n],
            w_hat: None,
        }
    }
}

/// Scalar β minimizing ‖(H + B + μI)d + g‖ over d = (H+μI)⁻¹(βB − I)g,
/// clamped so that |β|·‖B‖_F ≤ bμ/(‖H‖+μ). `norm_b_ub` must bound ‖B‖₂ from
/// above. Uses the factors already built at `mu`.
pub fn compute_beta(
    bs: &BlockSystem<'_>,
    mu: f64,
    b: f64,
    norm_h: f64,
    norm_b_ub: f64,
) -> Result<Correction, SparseError> {
    let g = bs.gradient();
    let bm = bs.b();
    let u = bm.spmv(g)?;
    let w_hat = bs.solve(mu, g)?;
    let w = bm.spmv(&w_hat)?;
    let v_hat = bs.solve(mu, &u)?;
    let v = bm.spmv(&v_hat)?;
    let uv: Vec<f64> = u.iter().zip(&v).map(|(a, c)| a + c).collect();
    let denom = dot(&uv, &uv);
    let beta_star = if denom > BETA_DEGENERATE { dot(&uv, &w) / denom } else { 0.0 };
    let beta_max = if norm_b_ub > 0.0 {
        b * mu / ((norm_h + mu) * norm_b_ub)
    } else {
        f64::INFINITY
    };
    let beta = beta_star.clamp(-beta_max, beta_max);
    Ok(Correction {
        beta,
        beta_star,
        beta_max,
        gamma: 1.0 + beta.abs() * norm_b_ub,
        u,
        w_hat: Some(w_hat),
    })
}

/// Split direction: block-wise (H_s + μI) d_s = β (B g)_s − g_s.
pub fn compute_direction(bs: &BlockSystem<'_>, beta: f64, u: &[f64], mu: f64) -> Result<Vec<f64>, SparseError> {
    let rhs: Vec<f64> = u.iter().zip(bs.gradient()).map(|(ui, gi)| beta * ui - gi).collect();
    bs.solve(mu, &rhs)
}

/// ‖g + (JᵀJ + μI)d‖ / ‖g‖ with g = JᵀR, formed matrix-free. 0 when g = 0.
pub fn linear_residual_rho(j: &SparseMatrix, r: &[f64], d: &[f64], mu: f64) -> Result<f64, SparseError> {
    let g = j.spmv_transpose(r)?;
    let gn = norm2(&g);
    if gn == 0.0 {
        return Ok(0.0);
    }
    let jtjd = j.spmv_transpose(&j.spmv(d)?)?;
    let res: Vec<f64> = jtjd.iter().zip(d).zip(&g).map(|((a, di), gi)| a + mu * di + gi).collect();
    Ok(norm2(&res) / gn)
}

/// P = ½‖R‖² − ½‖R + Jd‖² − ½μ‖d‖².
pub fn predicted_reduction(r: &[f64], j: &SparseMatrix, d: &[f64], mu: f64) -> Result<f64, SparseError> {
    let jd = j.spmv(d)?;
    let lin: f64 = r.iter().zip(&jd).map(|(a, c)| (a + c) * (a + c)).sum();
    Ok(0.5 * dot(r, r) - 0.5 * lin - 0.5 * mu * dot(d, d))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearch {
    pub t: f64,
    pub t_max: f64,
    pub f_new: f64,
    pub x_new: Vec<f64>,
    pub backtracks: usize,
}

/// Backtracking failure: the last trial step and the objective there
/// (infinite when the trial point was undefined).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchFailure {
    pub t: f64,
    pub f_trial: f64,
}

/// Armijo backtracking from t = min(1, 1/γ), halving up to `max_backtracks`
/// times. `objective` returns `None` where F is undefined, which counts as
/// a rejected trial.
#[allow(clippy::too_many_arguments)]
pub fn line_search<F>(
    objective: F,
    x: &[f64],
    f0: f64,
    d: &[f64],
    g_dot_d: f64,
    gamma: f64,
    c: f64,
    max_backtracks: usize,
) -> Result<LineSearch, LineSearchFailure>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let t_max = 1.0f64.min(1.0 / gamma);
    let mut t = t_max;
    let mut trial = vec![0.0; x.len()];
    let mut f_trial = f64::INFINITY;
    for backtracks in 0..=max_backtracks {
        for ((ti, xi), di) in trial.iter_mut().zip(x).zip(d) {
            *ti = xi + t * di;
        }
        f_trial = objective(&trial).unwrap_or(f64::INFINITY);
        if f_trial <= f0 + c * t * g_dot_d {
            return Ok(LineSearch {
                t,
                t_max,
                f_new: f_trial,
                x_new: trial,
                backtracks,
            });
        }
        if backtracks < max_backtracks {
            t *= 0.5;
        }
    }
    Err(LineSearchFailure { t, f_trial })
}

/// ℓ doubles after a truncated step, halves (not below `ell_min`) when the
/// actual reduction beats η times the predicted one, and stays otherwise.
pub fn update_ell(ell: f64, t: f64, t_max: f64, a_red: f64, p: f64, eta: f64, ell_min: f64) -> f64 {
    if t < t_max {
        2.0 * ell
    } else if a_red > eta * p {
        ell_min.max(ell / 2.0)
    } else {
        ell
    }
}

/// Fractions of weighted residuals with |r| below 1, 2 and 3.
pub fn residual_fractions(r: &[f64]) -> [f64; 3] {
    if r.is_empty() {
        return [1.0; 3];
    }
    let mut counts = [0usize; 3];
    for v in r {
        let a = v.abs();
        for (k, c) in counts.iter_mut().enumerate() {
            if a < (k + 1) as f64 {
                *c += 1;
            }
        }
    }
    counts.map(|c| c as f64 / r.len() as f64)
}

/// Stopping rule: at least 68%, 95% and 99.5% of the weighted residuals lie
/// within 1, 2 and 3 standard deviations.
pub fn stopping_met(r: &[f64]) -> bool {
    let [f1, f2, f3] = residual_fractions(r);
    f1 >= 0.68 && f2 >= 0.95 && f3 >= 0.995
}
