//! Sparse kernels, factorizations, MINRES and spectral estimates.

mod csr;
mod eigen;
mod factor;
mod minres;

pub use csr::CsrMatrix;
pub use eigen::{
    extreme_eigs, generalized_eigenvalues, lanczos_extremes, EigMode, RitzExtremes, SpectrumBounds, DENSE_MAX_DIM,
    LANCZOS_TOL,
};
pub use factor::{SparseLu, SpdFactor};
pub use minres::{minres, SolveReport, DEFAULT_MAXITER, DEFAULT_RTOL};

use crate::error::{BiotError, Result};

/// A square linear map `y = T x`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()>;
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if self.nrows() != self.ncols() {
            return Err(BiotError::DimensionMismatch { expected: self.nrows(), got: self.ncols() });
        }
        self.spmv_into(x, y)
    }
}

/// The identity map, i.e. no preconditioning.
#[derive(Debug, Clone, Copy)]
pub struct IdentityOperator {
    dim: usize,
}

impl IdentityOperator {
    pub fn new(dim: usize) -> Self {
        IdentityOperator { dim }
    }
}

impl LinearOperator for IdentityOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(BiotError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        y.copy_from_slice(x);
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is enabled.
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
