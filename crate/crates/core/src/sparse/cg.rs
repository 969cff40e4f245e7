use super::norm::{dot, norm2};
use super::SparseMatrix;

/// Jacobi-preconditioned conjugate gradients on `(A + mu I) x = b`.
#[derive(Debug, Clone)]
pub struct JacobiPcg {
    a: SparseMatrix,
    mu: f64,
    inv_diag: Vec<f64>,
    pub tol: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

impl JacobiPcg {
    pub fn new(a: &SparseMatrix, mu: f64, tol: f64) -> Self {
        let n = a.n_rows();
        let inv_diag = (0..n).map(|i| 1.0 / (a.get(i, i) + mu)).collect();
        Self {
            a: a.clone(),
            mu,
            inv_diag,
            tol,
            max_iters: 10 * n.max(1),
        }
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        self.a.spmv_into(v, out).expect("square system");
        for (o, vi) in out.iter_mut().zip(v) {
            *o += self.mu * vi;
        }
    }

    pub fn solve(&self, b: &[f64]) -> (Vec<f64>, PcgOutcome) {
        let n = b.len();
        let mut x = vec![0.0; n];
        let b_norm = norm2(b);
        if b_norm == 0.0 {
            let outcome = PcgOutcome {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            };
            return (x, outcome);
        }
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&self.inv_diag).map(|(r, m)| r * m).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&r, &z);
        let mut rel = 1.0;
        for it in 0..self.max_iters {
            self.apply(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            rel = norm2(&r) / b_norm;
            if rel <= self.tol {
                // recompute the true residual; recurrences drift
                self.apply(&x, &mut ap);
                let true_rel = b.iter().zip(&ap).map(|(b, a)| (b - a) * (b - a)).sum::<f64>().sqrt() / b_norm;
                if true_rel <= self.tol {
                    let outcome = PcgOutcome {
                        iterations: it + 1,
                        relative_residual: true_rel,
                        converged: true,
                    };
                    return (x, outcome);
                }
                for i in 0..n {
                    r[i] = b[i] - ap[i];
                }
                rel = true_rel;
            }
            for i in 0..n {
                z[i] = r[i] * self.inv_diag[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let outcome = PcgOutcome {
            iterations: self.max_iters,
            relative_residual: rel,
            converged: false,
        };
        (x, outcome)
    }
}
