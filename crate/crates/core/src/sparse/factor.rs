use super::cg::JacobiPcg;
use super::cholesky::{Breakdown, DenseCholesky, SparseCholesky};
use super::{SparseError, SparseMatrix};
use crate::partition::{nested_dissection, Graph};

/// Blocks at or below this dimension use the dense factor under `Auto`.
pub const DENSE_MAX_DIM: usize = 64;
pub const CG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FactorStrategy {
    /// Dense below `DENSE_MAX_DIM`, sparse Cholesky above.
    #[default]
    Auto,
    Dense,
    SparseCholesky,
    ConjugateGradient,
}

/// Which backend actually produced a factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorPath {
    Dense,
    SparseCholesky,
    ConjugateGradient,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FactorOptions<'a> {
    pub strategy: FactorStrategy,
    /// Block index reported in errors.
    pub block: usize,
    /// Fill-reducing permutation (`perm[new] = old`) for the sparse path.
    /// Computed by nested dissection on the matrix pattern when absent.
    pub ordering: Option<&'a [usize]>,
}

#[derive(Debug, Clone)]
enum Backend {
    Dense(DenseCholesky),
    Sparse(SparseCholesky),
    Cg(JacobiPcg),
}

/// Reusable factor of `H + mu I`. Valid only for the `(H, mu)` pair it was
/// built from.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    dim: usize,
    mu: f64,
    block: usize,
    backend: Backend,
}

/// Factorizes `H + mu I` with the default strategy.
pub fn spd_factorize(h: &SparseMatrix, mu: f64) -> Result<SpdFactor, SparseError> {
    SpdFactor::new(h, mu, FactorOptions::default())
}

pub fn spd_solve(factor: &SpdFactor, rhs: &[f64]) -> Result<Vec<f64>, SparseError> {
    factor.solve(rhs)
}

impl SpdFactor {
    pub fn new(h: &SparseMatrix, mu: f64, opts: FactorOptions<'_>) -> Result<Self, SparseError> {
        if !h.is_square() {
            return Err(SparseError::NotSquare {
                rows: h.n_rows(),
                cols: h.n_cols(),
            });
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(SparseError::InvalidDamping(mu));
        }
        let dim = h.n_rows();
        let breakdown = |b: Breakdown| SparseError::FactorizationBreakdown {
            block: opts.block,
            column: b.column,
            pivot: b.pivot,
        };
        let strategy = match opts.strategy {
            FactorStrategy::Auto if dim <= DENSE_MAX_DIM => FactorStrategy::Dense,
            FactorStrategy::Auto => FactorStrategy::SparseCholesky,
            s => s,
        };
        let backend = match strategy {
            FactorStrategy::Dense => Backend::Dense(DenseCholesky::factorize(h, mu).map_err(breakdown)?),
            FactorStrategy::SparseCholesky => {
                let owned;
                let perm = match opts.ordering {
                    Some(p) => {
                        if p.len() != dim {
                            return Err(SparseError::DimensionMismatch {
                                what: "ordering",
                                expected: dim,
                                found: p.len(),
                            });
                        }
                        p
                    }
                    None => {
                        owned = nested_dissection(&Graph::from_matrix_pattern(h), 0);
                        &owned
                    }
                };
                Backend::Sparse(SparseCholesky::factorize(h, mu, perm).map_err(breakdown)?)
            }
            FactorStrategy::ConjugateGradient => Backend::Cg(JacobiPcg::new(h, mu, CG_TOL)),
            FactorStrategy::Auto => unreachable!(),
        };
        Ok(Self {
            dim,
            mu,
            block: opts.block,
            backend,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn path(&self) -> FactorPath {
        match self.backend {
            Backend::Dense(_) => FactorPath::Dense,
            Backend::Sparse(_) => FactorPath::SparseCholesky,
            Backend::Cg(_) => FactorPath::ConjugateGradient,
        }
    }

    /// Stored entries of the triangular factor, when there is one.
    pub fn factor_nnz(&self) -> Option<usize> {
        match &self.backend {
            Backend::Dense(_) => Some(self.dim * (self.dim + 1) / 2),
            Backend::Sparse(s) => Some(s.factor_nnz()),
            Backend::Cg(_) => None,
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, SparseError> {
        if rhs.len() != self.dim {
            return Err(SparseError::DimensionMismatch {
                what: "spd_solve rhs",
                expected: self.dim,
                found: rhs.len(),
            });
        }
        match &self.backend {
            Backend::Dense(f) => Ok(f.solve(rhs)),
            Backend::Sparse(f) => Ok(f.solve(rhs)),
            Backend::Cg(f) => {
                let (x, outcome) = f.solve(rhs);
                if outcome.converged {
                    Ok(x)
                } else {
                    Err(SparseError::CgNotConverged {
                        block: self.block,
                        iterations: outcome.iterations,
                        residual: outcome.relative_residual,
                    })
                }
            }
        }
    }

    /// Errors unless this factor was built with damping `mu`.
    pub fn check_mu(&self, mu: f64) -> Result<(), SparseError> {
        if self.mu == mu {
            Ok(())
        } else {
            Err(SparseError::StaleFactor {
                block: self.block,
                factored: self.mu,
                requested: mu,
            })
        }
    }
}
