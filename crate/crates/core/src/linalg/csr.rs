use std::fmt::Write as _;

use crate::error::{BiotError, Result};

/// Compressed sparse row matrix of `f64`.
///
/// Column indices are strictly increasing within each row; duplicates are
/// summed on construction. Explicit zeros may be stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(nrows: usize, ncols: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if row_ptr.len() != nrows + 1 {
            return Err(BiotError::DimensionMismatch { expected: nrows + 1, got: row_ptr.len() });
        }
        if col_idx.len() != values.len() || row_ptr[nrows] != col_idx.len() {
            return Err(BiotError::DimensionMismatch { expected: row_ptr[nrows], got: col_idx.len() });
        }
        for r in 0..nrows {
            if row_ptr[r] > row_ptr[r + 1] {
                return Err(BiotError::Format(format!("row offsets decrease at row {r}")));
            }
            let cols = &col_idx[row_ptr[r]..row_ptr[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(BiotError::Format(format!("columns of row {r} not strictly increasing")));
            }
            if cols.last().is_some_and(|&c| c >= ncols) {
                return Err(BiotError::Format(format!("column index out of range in row {r}")));
            }
        }
        Ok(CsrMatrix { nrows, ncols, row_ptr, col_idx, values })
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            counts[r + 1] += 1;
        }
        for r in 0..nrows {
            counts[r + 1] += counts[r];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            let k = next[r];
            cols[k] = c;
            vals[k] = v;
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            scratch.clear();
            scratch.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
            scratch.sort_unstable_by_key(|e| e.0);
            for &(c, v) in &scratch {
                if col_idx.len() > row_ptr[r] && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        CsrMatrix { nrows: n, ncols: n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: d.to_vec() }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    /// `y = A x`, accumulated row by row in storage order.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.ncols {
            return Err(BiotError::DimensionMismatch { expected: self.ncols, got: x.len() });
        }
        if y.len() != self.nrows {
            return Err(BiotError::DimensionMismatch { expected: self.nrows, got: y.len() });
        }
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yr = acc;
        }
        Ok(())
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                col_idx[next[c]] = r;
                values[next[c]] = self.values[k];
                next[c] += 1;
            }
        }
        CsrMatrix { nrows: self.ncols, ncols: self.nrows, row_ptr: counts, col_idx, values }
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `a * self + b * other` over the union of both sparsity patterns.
    pub fn linear_combination(&self, a: f64, other: &CsrMatrix, b: f64) -> Result<CsrMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(BiotError::DimensionMismatch {
                expected: self.nrows * self.ncols,
                got: other.nrows * other.ncols,
            });
        }
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        let mut col_idx = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(self.nnz().max(other.nnz()));
        row_ptr.push(0);
        for r in 0..self.nrows {
            let (mut i, ie) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let (mut j, je) = (other.row_ptr[r], other.row_ptr[r + 1]);
            while i < ie || j < je {
                let ci = if i < ie { self.col_idx[i] } else { usize::MAX };
                let cj = if j < je { other.col_idx[j] } else { usize::MAX };
                if ci == cj {
                    col_idx.push(ci);
                    values.push(a * self.values[i] + b * other.values[j]);
                    i += 1;
                    j += 1;
                } else if ci < cj {
                    col_idx.push(ci);
                    values.push(a * self.values[i]);
                    i += 1;
                } else {
                    col_idx.push(cj);
                    values.push(b * other.values[j]);
                    j += 1;
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix { nrows: self.nrows, ncols: self.ncols, row_ptr, col_idx, values })
    }

    /// `selfᵀ · diag(d) · self`, the sparse Gram product used by the
    /// augmented and Schur-type blocks.
    pub fn gram_diag(&self, d: &[f64]) -> Result<CsrMatrix> {
        if d.len() != self.nrows {
            return Err(BiotError::DimensionMismatch { expected: self.nrows, got: d.len() });
        }
        let mut triplets = Vec::new();
        for (r, &w) in d.iter().enumerate() {
            let range = self.row_ptr[r]..self.row_ptr[r + 1];
            for i in range.clone() {
                let (ci, vi) = (self.col_idx[i], self.values[i]);
                if vi == 0.0 {
                    continue;
                }
                for j in range.clone() {
                    let vj = self.values[j];
                    if vj != 0.0 {
                        triplets.push((ci, self.col_idx[j], w * vi * vj));
                    }
                }
            }
        }
        Ok(CsrMatrix::from_triplets(self.ncols, self.ncols, &triplets))
    }

    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|r| self.row(r).map(|(_, v)| v).sum()).collect()
    }

    /// `true` if every stored entry lies on the diagonal.
    pub fn is_diagonal(&self) -> bool {
        (0..self.nrows).all(|r| self.row(r).all(|(c, v)| c == r || v == 0.0))
    }

    /// Extracts rows `rows` and columns `cols` (both given as index lists).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            map[old] = new;
        }
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for &r in rows {
            scratch.clear();
            scratch.extend(self.row(r).filter(|(c, _)| map[*c] != usize::MAX).map(|(c, v)| (map[c], v)));
            scratch.sort_unstable_by_key(|e| e.0);
            for &(c, v) in &scratch {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { nrows: rows.len(), ncols: cols.len(), row_ptr, col_idx, values }
    }

    /// Assembles a block matrix. `None` blocks are zero; every block row must
    /// contain at least one block fixing its height (and likewise per column).
    pub fn from_blocks(blocks: &[Vec<Option<&CsrMatrix>>]) -> Result<CsrMatrix> {
        let nbr = blocks.len();
        let nbc = blocks.first().map_or(0, |r| r.len());
        let mut heights = vec![None; nbr];
        let mut widths = vec![None; nbc];
        for (i, row) in blocks.iter().enumerate() {
            if row.len() != nbc {
                return Err(BiotError::DimensionMismatch { expected: nbc, got: row.len() });
            }
            for (j, b) in row.iter().enumerate() {
                if let Some(b) = b {
                    for (slot, size) in [(&mut heights[i], b.nrows), (&mut widths[j], b.ncols)] {
                        match *slot {
                            None => *slot = Some(size),
                            Some(s) if s != size => {
                                return Err(BiotError::DimensionMismatch { expected: s, got: size })
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
        let heights: Vec<usize> = heights
            .into_iter()
            .map(|h| h.ok_or_else(|| BiotError::Format("empty block row".into())))
            .collect::<Result<_>>()?;
        let widths: Vec<usize> = widths
            .into_iter()
            .map(|w| w.ok_or_else(|| BiotError::Format("empty block column".into())))
            .collect::<Result<_>>()?;
        let col_off: Vec<usize> = widths
            .iter()
            .scan(0, |s, w| {
                let o = *s;
                *s += w;
                Some(o)
            })
            .collect();
        let nrows: usize = heights.iter().sum();
        let ncols: usize = widths.iter().sum();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (i, row) in blocks.iter().enumerate() {
            for r in 0..heights[i] {
                for (j, b) in row.iter().enumerate() {
                    if let Some(b) = b {
                        for (c, v) in b.row(r) {
                            col_idx.push(col_off[j] + c);
                            values.push(v);
                        }
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        Ok(CsrMatrix { nrows, ncols, row_ptr, col_idx, values })
    }

    /// Symmetric elimination on a square block: zero the rows and columns
    /// flagged in `mask`, then put `diag` on their diagonal.
    pub fn eliminate_symmetric(&self, mask: &[bool], diag: f64) -> CsrMatrix {
        assert_eq!(self.nrows, self.ncols);
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            if mask[r] {
                triplets.push((r, r, diag));
                continue;
            }
            for (c, v) in self.row(r) {
                if !mask[c] {
                    triplets.push((r, c, v));
                }
            }
        }
        CsrMatrix::from_triplets(self.nrows, self.ncols, &triplets)
    }

    /// Drops the entries in flagged rows and/or flagged columns.
    pub fn zero_rows_cols(&self, row_mask: Option<&[bool]>, col_mask: Option<&[bool]>) -> CsrMatrix {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            if row_mask.is_some_and(|m| m[r]) {
                continue;
            }
            for (c, v) in self.row(r) {
                if !col_mask.is_some_and(|m| m[c]) {
                    triplets.push((r, c, v));
                }
            }
        }
        CsrMatrix::from_triplets(self.nrows, self.ncols, &triplets)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A − Aᵀ|` over all entries.
    pub fn symmetry_defect(&self) -> f64 {
        let t = self.transpose();
        match self.linear_combination(1.0, &t, -1.0) {
            Ok(d) => d.max_abs(),
            Err(_) => f64::INFINITY,
        }
    }

    pub fn to_dense(&self) -> faer::Mat<f64> {
        let mut m = faer::Mat::<f64>::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    /// Matrix Market coordinate export of a symmetric matrix (lower triangle).
    pub fn to_matrix_market_symmetric(&self) -> String {
        let lower: Vec<(usize, usize, f64)> = (0..self.nrows)
            .flat_map(|r| self.row(r).filter(move |(c, _)| *c <= r).map(move |(c, v)| (r, c, v)))
            .collect();
        let mut s = String::with_capacity(32 * lower.len() + 64);
        s.push_str("%%MatrixMarket matrix coordinate real symmetric\n");
        let _ = writeln!(s, "{} {} {}", self.nrows, self.ncols, lower.len());
        for (r, c, v) in lower {
            let _ = writeln!(s, "{} {} {:e}", r + 1, c + 1, v);
        }
        s
    }
}
