use crate::model::Problem;
use crate::partition::{build_variable_graph, nested_dissection, Partition};
use crate::sparse::{
    power_iteration_from, CsrBuilder, FactorOptions, FactorStrategy, SparseError, SparseMatrix, SpdFactor, POWER_ITERS,
    POWER_TOL,
};

use super::SolverError;

/// Variable-to-block map plus a fill-reducing ordering for every block.
/// Built once per solve.
#[derive(Debug, Clone)]
pub struct BlockLayout {
    labels: Vec<usize>,
    blocks: Vec<Vec<usize>>,
    orderings: Vec<Option<Vec<usize>>>,
}

impl BlockLayout {
    /// Blocks from a point partition. Each block is ordered by nested
    /// dissection of its own point graph, both coordinates of a point kept
    /// adjacent.
    pub fn new(problem: &Problem, partition: &Partition, seed: u64) -> Self {
        let graph = build_variable_graph(problem);
        let orderings = partition
            .block_points()
            .iter()
            .map(|points| {
                let perm = nested_dissection(&graph.induced_subgraph(points), seed);
                Some(perm.iter().flat_map(|&q| [2 * q, 2 * q + 1]).collect())
            })
            .collect();
        Self {
            labels: partition.variable_labels(),
            blocks: partition.block_variables(),
            orderings,
        }
    }

    /// Blocks from arbitrary variable labels; orderings are left to the
    /// factorization.
    pub fn from_labels(labels: &[usize]) -> Self {
        let k = labels.iter().max().map_or(1, |&m| m + 1);
        let mut blocks = vec![Vec::new(); k];
        for (v, &s) in labels.iter().enumerate() {
            blocks[s].push(v);
        }
        Self {
            labels: labels.to_vec(),
            blocks,
            orderings: vec![None; k],
        }
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn n_variables(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn block(&self, s: usize) -> &[usize] {
        &self.blocks[s]
    }
}

/// The split Gauss-Newton system at one iterate: block-diagonal part H,
/// off-diagonal coupling B with H + B = JᵀJ, and the gradient g = JᵀR.
#[derive(Debug, Clone)]
pub struct BlockSystem<'a> {
    layout: &'a BlockLayout,
    h_blocks: Vec<SparseMatrix>,
    b: SparseMatrix,
    g: Vec<f64>,
    factors: Vec<SpdFactor>,
}

/// Symbolic split of JᵀJ for one Jacobian pattern: the sparsity of every
/// H_s and of B, and for each product J[r,p]·J[r,q] the slot it accumulates
/// into. Reassembling for new values at the same pattern is then a single
/// pass over the Jacobian rows.
#[derive(Debug, Clone)]
pub struct AssemblyPlan<'a> {
    layout: &'a BlockLayout,
    j_offsets: Vec<usize>,
    j_cols: Vec<usize>,
    /// Local CSR pattern per block, then B's pattern in global numbering.
    patterns: Vec<(Vec<usize>, Vec<usize>)>,
    /// Start of each pattern's values in the shared accumulation buffer.
    bases: Vec<usize>,
    targets: Vec<usize>,
}

impl<'a> AssemblyPlan<'a> {
    pub fn new(j: &SparseMatrix, layout: &'a BlockLayout) -> Result<Self, SparseError> {
        let n = layout.n_variables();
        if j.n_cols() != n {
            return Err(SparseError::DimensionMismatch {
                what: "Jacobian columns",
                expected: n,
                found: j.n_cols(),
            });
        }
        let k = layout.k();
        let labels = &layout.labels;
        let mut local_of = vec![0; n];
        for idx in &layout.blocks {
            for (l, &v) in idx.iter().enumerate() {
                local_of[v] = l;
            }
        }

        // row-by-row symbolic JᵀJ; rows of each block arrive in local order
        let jt = j.transpose();
        let mut patterns: Vec<(Vec<usize>, Vec<usize>)> = vec![(vec![0], Vec::new()); k + 1];
        let mut mark = vec![usize::MAX; n];
        let mut row_pattern = Vec::new();
        for i in 0..n {
            row_pattern.clear();
            for &row in jt.row(i).0 {
                for &c in j.row(row).0 {
                    if mark[c] != i {
                        mark[c] = i;
                        row_pattern.push(c);
                    }
                }
            }
            row_pattern.sort_unstable();
            let s = labels[i];
            for &c in &row_pattern {
                if labels[c] == s {
                    patterns[s].1.push(local_of[c]);
                } else {
                    patterns[k].1.push(c);
                }
            }
            let len = patterns[s].1.len();
            patterns[s].0.push(len);
            let len = patterns[k].1.len();
            patterns[k].0.push(len);
        }

        let mut bases = Vec::with_capacity(k + 1);
        let mut total = 0;
        for (_, cols) in &patterns {
            bases.push(total);
            total += cols.len();
        }

        let slot = |i: usize, c: usize| -> usize {
            let (m, row, col) = if labels[i] == labels[c] {
                (labels[i], local_of[i], local_of[c])
            } else {
                (k, i, c)
            };
            let (offsets, cols) = &patterns[m];
            let found = cols[offsets[row]..offsets[row + 1]]
                .binary_search(&col)
                .expect("product lies in the symbolic pattern");
            bases[m] + offsets[row] + found
        };
        let mut targets = Vec::new();
        for row in 0..j.n_rows() {
            let cols = j.row(row).0;
            for &a in cols {
                for &c in cols {
                    targets.push(slot(a, c));
                }
            }
        }

        Ok(Self {
            layout,
            j_offsets: j.row_offsets().to_vec(),
            j_cols: j.col_indices().to_vec(),
            patterns,
            bases,
            targets,
        })
    }

    /// Whether `j` has the pattern this plan was built for.
    pub fn matches(&self, j: &SparseMatrix) -> bool {
        j.row_offsets() == self.j_offsets.as_slice() && j.col_indices() == self.j_cols.as_slice()
    }

    /// Numeric assembly. Every entry of JᵀJ is summed over the Jacobian rows
    /// in ascending order, independent of the partition.
    pub fn assemble(&self, j: &SparseMatrix, r: &[f64]) -> Result<BlockSystem<'a>, SparseError> {
        if !self.matches(j) {
            return Err(SparseError::InvalidStructure(
                "Jacobian pattern differs from the assembly plan".into(),
            ));
        }
        let g = j.spmv_transpose(r)?;
        let total = self.bases.last().copied().unwrap_or(0) + self.patterns.last().map_or(0, |p| p.1.len());
        let mut acc = vec![0.0; total];
        let mut t = 0;
        for row in 0..j.n_rows() {
            let vals = j.row(row).1;
            for &a in vals {
                for &v in vals {
                    acc[self.targets[t]] += a * v;
                    t += 1;
                }
            }
        }

        // drop sums that cancelled exactly, as the CSR form stores no zeros
        let k = self.layout.k();
        let mut mats = self.patterns.iter().zip(&self.bases).enumerate().map(|(m, ((offsets, cols), &base))| {
            let n_rows = offsets.len() - 1;
            let n_cols = if m == k { self.layout.n_variables() } else { n_rows };
            let mut out = CsrBuilder::with_capacity(n_cols, n_rows, cols.len());
            for w in offsets.windows(2) {
                for p in w[0]..w[1] {
                    out.push(cols[p], acc[base + p]);
                }
                out.finish_row();
            }
            out.build()
        });
        let h_blocks: Vec<SparseMatrix> = mats.by_ref().take(k).collect();
        let b = mats.next().expect("coupling pattern");
        Ok(BlockSystem {
            layout: self.layout,
            h_blocks,
            b,
            g,
            factors: Vec::new(),
        })
    }
}

/// Splits JᵀJ by the layout's labels and forms g = JᵀR. For repeated
/// assembly at one pattern, keep an [`AssemblyPlan`].
pub fn assemble_blocks<'a>(
    j: &SparseMatrix,
    r: &[f64],
    layout: &'a BlockLayout,
) -> Result<BlockSystem<'a>, SolverError> {
    Ok(AssemblyPlan::new(j, layout)?.assemble(j, r)?)
}

impl<'a> BlockSystem<'a> {
    /// A system from an explicit split, for when H, B and g do not come from
    /// a Jacobian. `h` must be block diagonal under the layout.
    pub fn from_parts(
        layout: &'a BlockLayout,
        h: SparseMatrix,
        b: SparseMatrix,
        g: Vec<f64>,
    ) -> Result<Self, SparseError> {
        let n = layout.n_variables();
        for (what, m) in [("H", &h), ("B", &b)] {
            if m.n_rows() != n || m.n_cols() != n {
                return Err(SparseError::DimensionMismatch {
                    what,
                    expected: n,
                    found: if m.n_rows() != n { m.n_rows() } else { m.n_cols() },
                });
            }
        }
        if g.len() != n {
            return Err(SparseError::DimensionMismatch {
                what: "gradient",
                expected: n,
                found: g.len(),
            });
        }
        let h_blocks = layout.blocks.iter().map(|idx| h.principal_submatrix(idx)).collect();
        Ok(Self {
            layout,
            h_blocks,
            b,
            g,
            factors: Vec::new(),
        })
    }

    pub fn layout(&self) -> &'a BlockLayout {
        self.layout
    }

    /// Block-diagonal part of JᵀJ in global numbering, built from the blocks.
    pub fn h(&self) -> SparseMatrix {
        if self.layout.k() == 1 {
            return self.h_blocks[0].clone();
        }
        let n = self.layout.n_variables();
        let mut local_of = vec![0; n];
        for idx in &self.layout.blocks {
            for (l, &v) in idx.iter().enumerate() {
                local_of[v] = l;
            }
        }
        let mut h = CsrBuilder::with_capacity(n, n, self.h_blocks.iter().map(|m| m.nnz()).sum());
        for i in 0..n {
            let s = self.layout.labels[i];
            let idx = &self.layout.blocks[s];
            let (cols, vals) = self.h_blocks[s].row(local_of[i]);
            for (&c, &v) in cols.iter().zip(vals) {
                h.push(idx[c], v);
            }
            h.finish_row();
        }
        h.build()
    }

    pub fn h_block(&self, s: usize) -> &SparseMatrix {
        &self.h_blocks[s]
    }

    /// ‖H‖_F.
    pub fn h_frobenius(&self) -> f64 {
        self.h_blocks
            .iter()
            .flat_map(|m| m.values())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn b(&self) -> &SparseMatrix {
        &self.b
    }

    pub fn gradient(&self) -> &[f64] {
        &self.g
    }

    pub fn g_block(&self, s: usize) -> Vec<f64> {
        self.layout.blocks[s].iter().map(|&v| self.g[v]).collect()
    }

    /// y = H x, block by block.
    pub fn h_mul(&self, x: &[f64], y: &mut [f64]) {
        if self.layout.k() == 1 {
            self.h_blocks[0].spmv_into(x, y).expect("square block matrix");
            return;
        }
        let mut local = Vec::new();
        let mut out = Vec::new();
        for (m, idx) in self.h_blocks.iter().zip(&self.layout.blocks) {
            local.clear();
            local.extend(idx.iter().map(|&v| x[v]));
            out.resize(idx.len(), 0.0);
            m.spmv_into(&local, &mut out).expect("square block matrix");
            for (&v, &o) in idx.iter().zip(&out) {
                y[v] = o;
            }
        }
    }

    /// Power-iteration estimate of ‖H‖₂.
    pub fn h_norm(&self) -> f64 {
        self.h_norm_from(&mut vec![1.0; self.g.len()])
    }

    /// [`h_norm`](Self::h_norm) warm-started from `v`, which receives the
    /// final iterate for the next call.
    pub fn h_norm_from(&self, v: &mut [f64]) -> f64 {
        power_iteration_from(v, POWER_ITERS, POWER_TOL, |x, y| self.h_mul(x, y))
    }

    /// Factorizes every H_s + μI, replacing any earlier factors.
    pub fn factorize(&mut self, mu: f64, strategy: FactorStrategy) -> Result<(), SparseError> {
        self.factors = self
            .h_blocks
            .iter()
            .enumerate()
            .map(|(s, hs)| {
                let opts = FactorOptions {
                    strategy,
                    block: s,
                    ordering: self.layout.orderings[s].as_deref(),
                };
                SpdFactor::new(hs, mu, opts)
            })
            .collect::<Result<_, _>>()?;
        Ok(())
    }

    pub fn factors(&self) -> &[SpdFactor] {
        &self.factors
    }

    /// (H + μI)⁻¹ rhs, one independent solve per block.
    pub fn solve(&self, mu: f64, rhs: &[f64]) -> Result<Vec<f64>, SparseError> {
        if self.factors.len() != self.h_blocks.len() {
            return Err(SparseError::StaleFactor {
                block: self.factors.len(),
                factored: f64::NAN,
                requested: mu,
            });
        }
        let mut out = vec![0.0; rhs.len()];
        let mut local = Vec::new();
        for (f, idx) in self.factors.iter().zip(&self.layout.blocks) {
            f.check_mu(mu)?;
            local.clear();
            local.extend(idx.iter().map(|&v| rhs[v]));
            let ds = f.solve(&local)?;
            for (&v, d) in idx.iter().zip(ds) {
                out[v] = d;
            }
        }
        Ok(out)
    }

    /// Largest entrywise gap between H + B and JᵀJ formed independently from
    /// per-row outer products. Also checks that B has empty diagonal blocks.
    pub fn assembly_error(&self, j: &SparseMatrix) -> f64 {
        let n = self.layout.n_variables();
        let mut triplets = Vec::new();
        for row in 0..j.n_rows() {
            let (cols, vals) = j.row(row);
            for (&a, &va) in cols.iter().zip(vals) {
                for (&c, &vc) in cols.iter().zip(vals) {
                    triplets.push((a, c, va * vc));
                }
            }
        }
        let jtj = SparseMatrix::from_triplets(n, n, &triplets).expect("indices from a valid matrix");
        let h = self.h();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let (cols, vals) = jtj.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((h.get(i, c) + self.b.get(i, c) - v).abs());
            }
            for m in [&h, &self.b] {
                let (cols, _) = m.row(i);
                for &c in cols {
                    if jtj.get(i, c) == 0.0 {
                        worst = worst.max(m.get(i, c).abs());
                    }
                }
            }
            let (bcols, bvals) = self.b.row(i);
            for (&c, &v) in bcols.iter().zip(bvals) {
                if self.layout.labels[c] == self.layout.labels[i] {
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }
}
