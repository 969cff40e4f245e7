use std::fmt::{self, Write as _};
use std::time::Instant;

use crate::model::Problem;
use crate::partition::{partition_problem, Partition};
use crate::sparse::{dot, norm2, power_iteration_from, FactorPath, POWER_ITERS, POWER_TOL};

use super::blocks::{AssemblyPlan, BlockLayout};
use super::steps::{
    compute_beta, compute_direction, compute_mu, line_search, linear_residual_rho, predicted_reduction,
    residual_fractions, stopping_met, update_ell, Correction,
};
use super::{MuRule, SolverConfig, SolverError};

/// Exact header of the iteration log.
pub const LOG_HEADER: &str = "iter,F,grad_norm,mu,beta,gamma,t,ell,rho,backtracks,wall_ms";

/// Slack allowed on the per-iteration bounds checked by
/// [`IterationRecord::violations`].
pub const INVARIANT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    LineSearchFailure,
    NumericalError,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::LineSearchFailure => "line_search_failure",
            SolveStatus::NumericalError => "numerical_error",
        })
    }
}

/// One accepted iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// F at the start of the iteration.
    pub f: f64,
    pub grad_norm: f64,
    pub mu: f64,
    pub beta: f64,
    pub beta_star: f64,
    pub gamma: f64,
    pub t: f64,
    pub t_max: f64,
    /// ℓ used for this iteration's damping.
    pub ell: f64,
    /// Relative residual of the direction against the full damped system;
    /// NaN unless diagnostics are on.
    pub rho: f64,
    pub backtracks: usize,
    /// Milliseconds since the solve started, at the end of this iteration.
    pub wall_ms: f64,
    pub h_norm: f64,
    /// ‖B‖_F.
    pub b_norm: f64,
    pub g_dot_d: f64,
    pub d_norm: f64,
    pub f_new: f64,
    pub predicted: f64,
}

impl IterationRecord {
    /// Names of the per-iteration bounds this record breaks: sufficient
    /// descent, step length, γ ≤ 1+b, the correction box, μ ≥ 1 and
    /// decrease of F.
    pub fn violations(&self, b: f64) -> Vec<&'static str> {
        let mut out = Vec::new();
        let g2 = self.grad_norm * self.grad_norm;
        let descent = -(1.0 - b) * g2 / (self.h_norm + INVARIANT_SLACK + self.mu);
        if self.g_dot_d > descent {
            out.push("descent");
        }
        if self.d_norm > self.gamma / self.mu * self.grad_norm * (1.0 + INVARIANT_SLACK) {
            out.push("step");
        }
        if self.gamma > 1.0 + b + INVARIANT_SLACK {
            out.push("gamma");
        }
        if self.beta.abs() * self.b_norm > b * self.mu / (self.h_norm + self.mu) + 1e-12 {
            out.push("beta_box");
        }
        if self.mu < 1.0 {
            out.push("mu");
        }
        if !(self.f_new < self.f) {
            out.push("monotone");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub records: Vec<IterationRecord>,
    pub final_x: Vec<f64>,
    pub final_f: f64,
    /// Fractions of final weighted residuals within 1, 2 and 3 sigma.
    pub residual_fractions: [f64; 3],
    /// Backend used by the block factorizations.
    pub factor_path: Option<FactorPath>,
    pub elapsed_ms: f64,
    /// Why the run stopped early, for the failure statuses.
    pub message: Option<String>,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// Iteration log as CSV with [`LOG_HEADER`].
    pub fn log_csv(&self) -> String {
        let mut s = String::from(LOG_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{:?}",
                r.iter, r.f, r.grad_norm, r.mu, r.beta, r.gamma, r.t, r.ell, r.rho, r.backtracks, r.wall_ms
            );
        }
        s
    }
}

/// Partitions the problem into `cfg.k` subsets (seeded by `cfg.seed`) and
/// solves. Returns the partition and its wall time alongside the report.
pub fn solve_problem(problem: &Problem, cfg: &SolverConfig) -> Result<(Partition, f64, SolveReport), SolverError> {
    cfg.validate()?;
    let start = Instant::now();
    let partition = if cfg.k == 1 {
        Partition::single(problem)
    } else {
        partition_problem(problem, cfg.k, cfg.seed)?
    };
    let partition_ms = start.elapsed().as_secs_f64() * 1e3;
    let report = solve(problem, &partition, cfg)?;
    Ok((partition, partition_ms, report))
}

/// Runs the splitted Levenberg-Marquardt iteration from the problem's
/// initial guess. Failures after setup are reported through the status.
pub fn solve(problem: &Problem, partition: &Partition, cfg: &SolverConfig) -> Result<SolveReport, SolverError> {
    cfg.validate()?;
    if partition.k() != cfg.k {
        return Err(SolverError::PartitionMismatch {
            expected: cfg.k,
            found: partition.k(),
        });
    }
    if partition.assignment().len() != problem.n_points() {
        return Err(SolverError::PartitionMismatch {
            expected: problem.n_points(),
            found: partition.assignment().len(),
        });
    }
    let start = Instant::now();
    let layout = BlockLayout::new(problem, partition, cfg.seed);
    let mut x = problem.initial_guess().to_vec();
    let mut ell = cfg.ell0;
    let mut records = Vec::new();
    let mut factor_path = None;
    // power-iteration vectors carried across iterations
    let mut h_vec = vec![1.0; problem.n_variables()];
    let mut jtj_vec = vec![1.0; problem.n_variables()];
    let mut plan: Option<AssemblyPlan> = None;

    // r is empty when the initial point could not be evaluated
    let m = problem.n_residuals();
    let finish = |status, x: Vec<f64>, r: &[f64], records, factor_path, message| SolveReport {
        status,
        records,
        final_f: if r.len() == m { 0.5 * dot(r, r) } else { f64::NAN },
        residual_fractions: if r.len() == m { residual_fractions(r) } else { [f64::NAN; 3] },
        final_x: x,
        factor_path,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        message,
    };

    let mut last_r = Vec::new();
    for iter in 0..=cfg.max_iters {
        let (r, j) = match problem.evaluate(&x) {
            Ok(v) => v,
            Err(e) => {
                return Ok(finish(
                    SolveStatus::NumericalError,
                    x,
                    &last_r,
                    records,
                    factor_path,
                    Some(e.to_string()),
                ))
            }
        };
        if stopping_met(&r) {
            return Ok(finish(SolveStatus::Converged, x, &r, records, factor_path, None));
        }
        if iter == cfg.max_iters {
            return Ok(finish(SolveStatus::MaxIters, x, &r, records, factor_path, None));
        }
        let f = 0.5 * dot(&r, &r);

        let outcome = (|| -> Result<_, String> {
            if !plan.as_ref().is_some_and(|p| p.matches(&j)) {
                plan = Some(AssemblyPlan::new(&j, &layout).map_err(|e| e.to_string())?);
            }
            let plan = plan.as_ref().expect("plan built above");
            let mut bs = plan.assemble(&j, &r).map_err(|e| e.to_string())?;
            if cfg.check_assembly {
                let err = bs.assembly_error(&j);
                if !(err <= 1e-12 * (1.0 + bs.h_frobenius())) {
                    return Err(format!("block assembly differs from JᵀJ by {err:e}"));
                }
            }
            let g = bs.gradient().to_vec();
            let grad_norm = norm2(&g);
            if grad_norm == 0.0 {
                return Err("gradient vanished before the stopping rule was met".into());
            }
            let h_norm = bs.h_norm_from(&mut h_vec);
            let norm_r = norm2(&r);
            let b_norm = bs.b().frobenius_norm();
            let mu = match cfg.mu_rule {
                MuRule::Residual => 1.0f64.max(ell * norm_r),
                MuRule::Algebraic => {
                    let jtj_norm = power_iteration_from(&mut jtj_vec, POWER_ITERS, POWER_TOL, |v, out| {
                        let jv = j.spmv(v).expect("dimensions match");
                        j.spmv_transpose_into(&jv, out).expect("dimensions match");
                    });
                    compute_mu(ell, h_norm, jtj_norm.sqrt(), norm_r, cfg.b).map_err(|e| e.to_string())?
                }
            };
            bs.factorize(mu, cfg.factor).map_err(|e| e.to_string())?;
            let corr = if cfg.beta_zero || bs.b().nnz() == 0 {
                Correction::none(g.len())
            } else {
                compute_beta(&bs, mu, cfg.b, h_norm, b_norm).map_err(|e| e.to_string())?
            };
            let d = compute_direction(&bs, corr.beta, &corr.u, mu).map_err(|e| e.to_string())?;
            let rho = if cfg.diagnostics {
                linear_residual_rho(&j, &r, &d, mu).map_err(|e| e.to_string())?
            } else {
                f64::NAN
            };
            let path = bs.factors().first().map(|f| f.path());
            Ok((g, grad_norm, h_norm, b_norm, mu, corr, d, rho, path))
        })();
        let (g, grad_norm, h_norm, b_norm, mu, corr, d, rho, path) = match outcome {
            Ok(v) => v,
            Err(msg) => return Ok(finish(SolveStatus::NumericalError, x, &r, records, factor_path, Some(msg))),
        };
        factor_path = factor_path.or(path);

        let g_dot_d = dot(&g, &d);
        let ls = line_search(
            |y| problem.residuals(y).ok().map(|ry| 0.5 * dot(&ry, &ry)),
            &x,
            f,
            &d,
            g_dot_d,
            corr.gamma,
            cfg.c,
            cfg.max_backtracks,
        );
        let ls = match ls {
            Ok(ls) => ls,
            Err(fail) => {
                let msg = format!(
                    "no acceptable step after {} halvings (last t={:e}, F={:e} vs {:e})",
                    cfg.max_backtracks, fail.t, fail.f_trial, f
                );
                return Ok(finish(SolveStatus::LineSearchFailure, x, &r, records, factor_path, Some(msg)));
            }
        };
        let predicted = match predicted_reduction(&r, &j, &d, mu) {
            Ok(p) => p,
            Err(e) => {
                return Ok(finish(
                    SolveStatus::NumericalError,
                    x,
                    &r,
                    records,
                    factor_path,
                    Some(e.to_string()),
                ))
            }
        };
        let a_red = f - ls.f_new;
        records.push(IterationRecord {
            iter,
            f,
            grad_norm,
            mu,
            beta: corr.beta,
            beta_star: corr.beta_star,
            gamma: corr.gamma,
            t: ls.t,
            t_max: ls.t_max,
            ell,
            rho,
            backtracks: ls.backtracks,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            h_norm,
            b_norm,
            g_dot_d,
            d_norm: norm2(&d),
            f_new: ls.f_new,
            predicted,
        });
        ell = update_ell(ell, ls.t, ls.t_max, a_red, predicted, cfg.eta, cfg.ell_min);
        x = ls.x_new;
        last_r = r;
    }
    unreachable!("the loop returns at iter == max_iters")
}
