//! Cholesky factorizations of `A + mu I` for symmetric positive semidefinite `A`.
//!
//! The sparse variant is an up-looking left-to-right factorization driven by
//! the elimination tree. It factors `P (A + mu I) Pᵀ` for a caller-supplied
//! fill-reducing permutation `P`.

use super::SparseMatrix;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakdown {
    pub column: usize,
    pub pivot: f64,
}

/// Dense lower-triangular factor, row-major.
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    n: usize,
    l: Vec<f64>,
}

impl DenseCholesky {
    pub fn factorize(a: &SparseMatrix, mu: f64) -> Result<Self, Breakdown> {
        let n = a.n_rows();
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if c <= i {
                    l[i * n + c] = v;
                }
            }
            l[i * n + i] += mu;
        }
        for j in 0..n {
            let mut d = l[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Breakdown { column: j, pivot: d });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = l[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

/// Sparse factor `L` (CSC, diagonal first in every column) of `P (A + mu I) Pᵀ`.
#[derive(Debug, Clone)]
pub struct SparseCholesky {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    col_offsets: Vec<usize>,
    row_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseCholesky {
    pub fn factorize(a: &SparseMatrix, mu: f64, perm: &[usize]) -> Result<Self, Breakdown> {
        let n = a.n_rows();
        assert_eq!(perm.len(), n, "permutation length");
        let mut inv = vec![NONE; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        debug_assert!(inv.iter().all(|&i| i != NONE), "not a permutation");

        // Upper triangle of the permuted matrix, stored by column (equivalently
        // the lower triangle by row): entries (i, k) with i <= k.
        let mut up_offsets = Vec::with_capacity(n + 1);
        let mut up_rows = Vec::with_capacity(a.nnz() / 2 + n);
        let mut up_vals = Vec::with_capacity(a.nnz() / 2 + n);
        up_offsets.push(0);
        for k in 0..n {
            let (cols, vals) = a.row(perm[k]);
            let mut diag = mu;
            for (&c, &v) in cols.iter().zip(vals) {
                let i = inv[c];
                if i < k {
                    up_rows.push(i);
                    up_vals.push(v);
                } else if i == k {
                    diag += v;
                }
            }
            up_rows.push(k);
            up_vals.push(diag);
            up_offsets.push(up_rows.len());
        }

        let parent = etree(n, &up_offsets, &up_rows);

        let mut mark = vec![NONE; n];
        let mut stack = vec![0usize; n];
        let mut counts = vec![1usize; n];
        for k in 0..n {
            let top = ereach(k, &up_offsets, &up_rows, &parent, &mut mark, &mut stack);
            for &j in &stack[top..] {
                counts[j] += 1;
            }
        }
        let mut col_offsets = vec![0usize; n + 1];
        for j in 0..n {
            col_offsets[j + 1] = col_offsets[j] + counts[j];
        }
        let nnz = col_offsets[n];
        let mut row_indices = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut next: Vec<usize> = col_offsets[..n].to_vec();
        let mut x = vec![0.0; n];
        mark.fill(NONE);

        for k in 0..n {
            let top = ereach(k, &up_offsets, &up_rows, &parent, &mut mark, &mut stack);
            for p in up_offsets[k]..up_offsets[k + 1] {
                x[up_rows[p]] = up_vals[p];
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &stack[top..] {
                let lki = x[i] / values[col_offsets[i]];
                x[i] = 0.0;
                for p in col_offsets[i] + 1..next[i] {
                    x[row_indices[p]] -= values[p] * lki;
                }
                d -= lki * lki;
                let p = next[i];
                next[i] += 1;
                row_indices[p] = k;
                values[p] = lki;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Breakdown {
                    column: perm[k],
                    pivot: d,
                });
            }
            let p = next[k];
            next[k] += 1;
            row_indices[p] = k;
            values[p] = d.sqrt();
        }

        Ok(Self {
            n,
            perm: perm.to_vec(),
            col_offsets,
            row_indices,
            values,
        })
    }

    pub fn factor_nnz(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for j in 0..n {
            let lo = self.col_offsets[j];
            let yj = y[j] / self.values[lo];
            y[j] = yj;
            for p in lo + 1..self.col_offsets[j + 1] {
                y[self.row_indices[p]] -= self.values[p] * yj;
            }
        }
        for j in (0..n).rev() {
            let lo = self.col_offsets[j];
            let mut s = y[j];
            for p in lo + 1..self.col_offsets[j + 1] {
                s -= self.values[p] * y[self.row_indices[p]];
            }
            y[j] = s / self.values[lo];
        }
        let mut out = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = y[new];
        }
        out
    }
}

/// Elimination tree of a symmetric matrix given by its upper triangle in
/// column form.
fn etree(n: usize, offsets: &[usize], rows: &[usize]) -> Vec<usize> {
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for &start in &rows[offsets[k]..offsets[k + 1]] {
            let mut i = start;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `L`, written to `stack[top..]` in
/// topological order. Returns `top`.
fn ereach(
    k: usize,
    offsets: &[usize],
    rows: &[usize],
    parent: &[usize],
    mark: &mut [usize],
    stack: &mut [usize],
) -> usize {
    let n = parent.len();
    let mut top = n;
    mark[k] = k;
    for &start in &rows[offsets[k]..offsets[k + 1]] {
        let mut i = start;
        if i > k {
            continue;
        }
        let mut len = 0;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            top -= 1;
            len -= 1;
            stack[top] = stack[len];
        }
    }
    top
}
