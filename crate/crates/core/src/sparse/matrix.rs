use std::fmt;

use super::SparseError;

/// Compressed sparse row matrix.
///
/// Columns inside a row are strictly increasing and explicit zeros are never
/// stored. All products accumulate in storage order, so results are
/// reproducible bit for bit.
#[derive(Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl fmt::Debug for SparseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SparseMatrix")
            .field("n_rows", &self.n_rows)
            .field("n_cols", &self.n_cols)
            .field("nnz", &self.nnz())
            .finish()
    }
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, validating every structural invariant.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, SparseError> {
        let invalid = |msg: String| Err(SparseError::InvalidStructure(msg));
        if row_offsets.len() != n_rows + 1 {
            return invalid(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n_rows + 1
            ));
        }
        if row_offsets[0] != 0 {
            return invalid("row_offsets[0] must be 0".into());
        }
        if col_indices.len() != values.len() || row_offsets[n_rows] != values.len() {
            return invalid("row_offsets, col_indices and values disagree on nnz".into());
        }
        for i in 0..n_rows {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            if lo > hi {
                return invalid(format!("row_offsets decreases at row {i}"));
            }
            for p in lo..hi {
                if col_indices[p] >= n_cols {
                    return invalid(format!("column {} out of range in row {i}", col_indices[p]));
                }
                if p > lo && col_indices[p] <= col_indices[p - 1] {
                    return invalid(format!("columns not strictly increasing in row {i}"));
                }
                if values[p] == 0.0 {
                    return invalid(format!("explicit zero stored in row {i}"));
                }
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Assembles from `(row, col, value)` triplets. Duplicates are summed in
    /// the order they appear; entries that end up exactly zero are dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, SparseError> {
        for &(r, c, _) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(SparseError::InvalidStructure(format!(
                    "triplet ({r}, {c}) outside {n_rows}x{n_cols}"
                )));
            }
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&t| (triplets[t].0, triplets[t].1));

        let mut builder = CsrBuilder::new(n_cols);
        let mut current_row = 0;
        let mut k = 0;
        while k < order.len() {
            let (r, c, _) = triplets[order[k]];
            while current_row < r {
                builder.finish_row();
                current_row += 1;
            }
            let mut sum = 0.0;
            while k < order.len() && triplets[order[k]].0 == r && triplets[order[k]].1 == c {
                sum += triplets[order[k]].2;
                k += 1;
            }
            builder.push(c, sum);
        }
        while current_row < n_rows {
            builder.finish_row();
            current_row += 1;
        }
        Ok(builder.build())
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut builder = CsrBuilder::new(n_cols);
        for row in rows {
            assert_eq!(row.len(), n_cols, "ragged dense matrix");
            for (j, &v) in row.iter().enumerate() {
                builder.push(j, v);
            }
            builder.finish_row();
        }
        builder.build()
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |p| vals[p])
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, row) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        out
    }

    /// `y = A x`, one left-to-right accumulation per row.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), SparseError> {
        check_len("spmv input", self.n_cols, x.len())?;
        check_len("spmv output", self.n_rows, y.len())?;
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            *yi = acc;
        }
        Ok(())
    }

    /// `x = Aᵀ y`. Rows are visited in ascending order, so each output entry
    /// accumulates its terms in row order.
    pub fn spmv_transpose(&self, y: &[f64]) -> Result<Vec<f64>, SparseError> {
        let mut x = vec![0.0; self.n_cols];
        self.spmv_transpose_into(y, &mut x)?;
        Ok(x)
    }

    pub fn spmv_transpose_into(&self, y: &[f64], x: &mut [f64]) -> Result<(), SparseError> {
        check_len("spmv_transpose input", self.n_rows, y.len())?;
        check_len("spmv_transpose output", self.n_cols, x.len())?;
        x.fill(0.0);
        for (i, &yi) in y.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                x[c] += v * yi;
            }
        }
        Ok(())
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let p = next[c];
                col_indices[p] = i;
                values[p] = v;
                next[c] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Principal submatrix on `index` (sorted ascending), renumbered locally.
    pub fn principal_submatrix(&self, index: &[usize]) -> SparseMatrix {
        let mut local = vec![usize::MAX; self.n_cols];
        for (k, &g) in index.iter().enumerate() {
            local[g] = k;
        }
        let mut builder = CsrBuilder::new(index.len());
        for &g in index {
            let (cols, vals) = self.row(g);
            for (&c, &v) in cols.iter().zip(vals) {
                let l = local[c];
                if l != usize::MAX {
                    builder.push(l, v);
                }
            }
            builder.finish_row();
        }
        builder.build()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(c, i)).abs());
            }
        }
        worst
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), SparseError> {
    if expected == found {
        Ok(())
    } else {
        Err(SparseError::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}

/// Row-by-row CSR writer. Columns must be pushed in increasing order within
/// a row; zero values are skipped.
#[derive(Debug)]
pub struct CsrBuilder {
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrBuilder {
    pub fn new(n_cols: usize) -> Self {
        Self {
            n_cols,
            row_offsets: vec![0],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn with_capacity(n_cols: usize, n_rows: usize, nnz: usize) -> Self {
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        row_offsets.push(0);
        Self {
            n_cols,
            row_offsets,
            col_indices: Vec::with_capacity(nnz),
            values: Vec::with_capacity(nnz),
        }
    }

    pub fn push(&mut self, col: usize, value: f64) {
        debug_assert!(col < self.n_cols);
        debug_assert!(
            self.col_indices.len() == *self.row_offsets.last().unwrap()
                || *self.col_indices.last().unwrap() < col
        );
        if value != 0.0 {
            self.col_indices.push(col);
            self.values.push(value);
        }
    }

    pub fn finish_row(&mut self) {
        self.row_offsets.push(self.values.len());
    }

    pub fn build(self) -> SparseMatrix {
        SparseMatrix {
            n_rows: self.row_offsets.len() - 1,
            n_cols: self.n_cols,
            row_offsets: self.row_offsets,
            col_indices: self.col_indices,
            values: self.values,
        }
    }
}
