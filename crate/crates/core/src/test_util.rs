use nalgebra::DMatrix;
use rand::Rng;

use crate::sparse::SparseMatrix;

/// Random matrix with roughly `density` of its entries drawn from [-1, 1].
pub fn random_sparse(rng: &mut impl Rng, rows: usize, cols: usize, density: f64) -> SparseMatrix {
    let mut triplets = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if rng.random_bool(density) {
                triplets.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
    }
    SparseMatrix::from_triplets(rows, cols, &triplets).unwrap()
}

/// Random symmetric matrix with the given density of off-diagonal pairs.
pub fn random_symmetric(rng: &mut impl Rng, n: usize, density: f64) -> SparseMatrix {
    let mut triplets = Vec::new();
    for i in 0..n {
        triplets.push((i, i, rng.random_range(-1.0..1.0)));
        for j in 0..i {
            if rng.random_bool(density) {
                let v = rng.random_range(-1.0..1.0);
                triplets.push((i, j, v));
                triplets.push((j, i, v));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &triplets).unwrap()
}

pub fn dense(a: &SparseMatrix) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.n_rows(), a.n_cols());
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            m[(i, c)] = v;
        }
    }
    m
}

pub fn from_na(m: &DMatrix<f64>) -> SparseMatrix {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    if rows.is_empty() {
        return SparseMatrix::zeros(0, m.ncols());
    }
    SparseMatrix::from_dense(&rows)
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
