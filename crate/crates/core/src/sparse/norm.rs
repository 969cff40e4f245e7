use super::{SparseError, SparseMatrix};

pub const POWER_ITERS: usize = 50;
pub const POWER_TOL: f64 = 1e-6;

/// Power-iteration estimate of the largest |eigenvalue| of a symmetric linear
/// operator given as a closure `apply(v, out)`.
///
/// The start vector is all ones, normalized; the estimate is `‖A v‖` for the
/// current unit iterate `v`. Iteration stops after `iters` products or once
/// the unit iterate moves by less than `tol` (up to sign). The estimate error
/// is then of order `tol²` relative.
pub fn power_iteration<F>(dim: usize, iters: usize, tol: f64, apply: F) -> f64
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut v = vec![1.0; dim];
    power_iteration_from(&mut v, iters, tol, apply)
}

/// [`power_iteration`] started from `v`, which is left holding the final
/// unit iterate. Reusing it for a slowly changing operator saves most of the
/// products. A zero or non-finite `v` falls back to the all-ones start.
pub fn power_iteration_from<F>(v: &mut [f64], iters: usize, tol: f64, mut apply: F) -> f64
where
    F: FnMut(&[f64], &mut [f64]),
{
    let dim = v.len();
    if dim == 0 {
        return 0.0;
    }
    let start = norm2(v);
    if start > 0.0 && start.is_finite() {
        v.iter_mut().for_each(|x| *x /= start);
    } else {
        v.fill(1.0 / (dim as f64).sqrt());
    }
    let mut w = vec![0.0; dim];
    let mut estimate = 0.0;
    for _ in 0..iters.max(1) {
        apply(v, &mut w);
        let norm = dot(&w, &w).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return if norm.is_finite() { estimate } else { norm };
        }
        estimate = norm;
        let (mut same, mut flip) = (0.0, 0.0);
        for (vi, wi) in v.iter_mut().zip(&w) {
            let next = wi / norm;
            same += (next - *vi) * (next - *vi);
            flip += (next + *vi) * (next + *vi);
            *vi = next;
        }
        if same.min(flip).sqrt() < tol {
            break;
        }
    }
    estimate
}

/// Spectral norm estimate of a symmetric sparse matrix.
pub fn spectral_norm_est(a: &SparseMatrix, iters: usize, tol: f64) -> Result<f64, SparseError> {
    if !a.is_square() {
        return Err(SparseError::NotSquare {
            rows: a.n_rows(),
            cols: a.n_cols(),
        });
    }
    debug_assert!(sampled_symmetric(a), "spectral_norm_est called on a non-symmetric matrix");
    Ok(power_iteration(a.n_rows(), iters, tol, |v, out| {
        a.spmv_into(v, out).expect("square operator")
    }))
}

pub fn frobenius_norm(a: &SparseMatrix) -> f64 {
    a.frobenius_norm()
}

// Checks up to 64 evenly spaced rows.
fn sampled_symmetric(a: &SparseMatrix) -> bool {
    let n = a.n_rows();
    let step = (n / 64).max(1);
    (0..n).step_by(step).all(|i| {
        let (cols, vals) = a.row(i);
        cols.iter().zip(vals).all(|(&j, &v)| {
            let t = a.get(j, i);
            (v - t).abs() <= 1e-9 * v.abs().max(t.abs()).max(1e-300)
        })
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
