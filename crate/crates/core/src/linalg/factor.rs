use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{MatMut, Side};

use super::{CsrMatrix, LinearOperator};
use crate::error::{BiotError, Result};

fn as_csc(a: &CsrMatrix) -> SparseColMatRef<'_, usize, f64> {
    // CSR arrays of A are the CSC arrays of Aᵀ.
    let sym = SymbolicSparseColMatRef::new_checked(a.ncols(), a.nrows(), a.row_ptr(), None, a.col_idx());
    SparseColMatRef::new(sym, a.values())
}

fn check_square(a: &CsrMatrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(BiotError::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    Ok(())
}

/// Sparse Cholesky factorization of a symmetric positive definite block.
pub struct SpdFactor {
    dim: usize,
    llt: Llt<usize, f64>,
}

impl std::fmt::Debug for SpdFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpdFactor").field("dim", &self.dim).finish()
    }
}

impl SpdFactor {
    /// Factorizes `a`; `block` names the block in error messages.
    pub fn new(a: &CsrMatrix, block: &str) -> Result<Self> {
        check_square(a)?;
        let fail = |reason: String| BiotError::Factorization { block: block.to_string(), reason };
        if a.nrows() == 0 {
            return Err(fail("empty matrix".into()));
        }
        if a.values().iter().any(|v| !v.is_finite()) {
            return Err(fail("non-finite entry".into()));
        }
        // Symmetric, so the CSC view of Aᵀ is A itself.
        let llt = as_csc(a).sp_cholesky(Side::Lower).map_err(|e| fail(format!("{e}")))?;
        Ok(SpdFactor { dim: a.nrows(), llt })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(BiotError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let n = x.len();
        self.llt.solve_in_place(MatMut::from_column_major_slice_mut(x, n, 1));
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}

impl LinearOperator for SpdFactor {
    fn dim(&self) -> usize {
        self.dim
    }

    /// Applies the inverse of the factored matrix.
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        y.copy_from_slice(x);
        self.solve_in_place(y)
    }
}

/// Sparse LU factorization with partial pivoting, for square indefinite
/// systems.
pub struct SparseLu {
    dim: usize,
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu").field("dim", &self.dim).finish()
    }
}

impl SparseLu {
    pub fn new(a: &CsrMatrix, block: &str) -> Result<Self> {
        check_square(a)?;
        let fail = |reason: String| BiotError::Factorization { block: block.to_string(), reason };
        let t = a.transpose();
        let lu = as_csc(&t).sp_lu().map_err(|e| fail(format!("{e}")))?;
        let out = SparseLu { dim: a.nrows(), lu };
        let probe = out.solve(&vec![1.0; out.dim])?;
        if probe.iter().any(|v| !v.is_finite()) {
            return Err(fail("matrix is numerically singular".into()));
        }
        Ok(out)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim {
            return Err(BiotError::DimensionMismatch { expected: self.dim, got: b.len() });
        }
        let mut x = b.to_vec();
        let n = x.len();
        self.lu.solve_in_place(MatMut::from_column_major_slice_mut(&mut x, n, 1));
        Ok(x)
    }
}
