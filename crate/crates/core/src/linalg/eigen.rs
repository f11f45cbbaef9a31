use std::str::FromStr;

use faer::{Mat, Side};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::{dot, CsrMatrix, SparseLu, SpdFactor};
use crate::error::{BiotError, Result};

pub const DENSE_MAX_DIM: usize = 20_000;
pub const LANCZOS_TOL: f64 = 1e-6;
const LANCZOS_MAX_STEPS: usize = 1500;
const LANCZOS_SEED: u64 = 0x5eed_b107;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigMode {
    Dense,
    Lanczos,
}

impl FromStr for EigMode {
    type Err = BiotError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dense" => Ok(EigMode::Dense),
            "lanczos" => Ok(EigMode::Lanczos),
            _ => Err(BiotError::Config(format!("unknown eigen mode {s:?}"))),
        }
    }
}

/// Extreme eigenvalue moduli of a symmetric (generalized) eigenproblem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBounds {
    pub min_abs: f64,
    pub max_abs: f64,
}

impl SpectrumBounds {
    pub fn condition_number(&self) -> f64 {
        self.max_abs / self.min_abs
    }
}

/// Lowest and highest Ritz values of a Lanczos run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RitzExtremes {
    pub lowest: f64,
    pub highest: f64,
    pub steps: usize,
}

/// Lanczos with full reorthogonalization in the inner product `⟨x, y⟩ = xᵀMy`.
///
/// `op` applies an operator self-adjoint in that inner product and `apply_m`
/// applies `M`. Converges when both extreme Ritz residuals fall below
/// `tol · max(|lowest|, |highest|)`.
pub fn lanczos_extremes<F, G>(dim: usize, mut op: F, mut apply_m: G, tol: f64, max_steps: usize) -> Result<RitzExtremes>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    G: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    if dim == 0 {
        return Err(BiotError::Eigen("empty operator".into()));
    }
    let max_steps = max_steps.min(dim).max(1);
    let mut rng = StdRng::seed_from_u64(LANCZOS_SEED);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut mv = vec![0.0; dim];
    apply_m(&v, &mut mv)?;
    let nrm = dot(&v, &mv).sqrt();
    if !(nrm > 0.0 && nrm.is_finite()) {
        return Err(BiotError::Eigen("inner-product matrix is not positive definite".into()));
    }
    v.iter_mut().for_each(|x| *x /= nrm);
    mv.iter_mut().for_each(|x| *x /= nrm);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut mbasis: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut mw = vec![0.0; dim];

    loop {
        op(&v, &mut w)?;
        let alpha = dot(&mv, &w);
        if !alpha.is_finite() {
            return Err(BiotError::Eigen("non-finite Rayleigh quotient".into()));
        }
        basis.push(std::mem::take(&mut v));
        mbasis.push(std::mem::take(&mut mv));
        alphas.push(alpha);
        // two passes of classical Gram–Schmidt against the whole basis
        for _ in 0..2 {
            for (q, mq) in basis.iter().zip(&mbasis) {
                let c = dot(mq, &w);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
            }
        }
        apply_m(&w, &mut mw)?;
        let beta_sq = dot(&w, &mw);
        let beta = beta_sq.max(0.0).sqrt();
        let k = alphas.len();
        let scale = alphas.iter().fold(0.0f64, |m, a| m.max(a.abs())).max(f64::MIN_POSITIVE);
        let exhausted = beta <= 1e-12 * scale || k >= dim;
        if exhausted || k % 10 == 0 || k >= max_steps {
            let (theta, last) = tridiag_eigs(&alphas, &betas)?;
            let lo = theta[0];
            let hi = theta[k - 1];
            let tol_abs = tol * lo.abs().max(hi.abs());
            let res_lo = beta * last[0].abs();
            let res_hi = beta * last[k - 1].abs();
            if exhausted || (res_lo <= tol_abs && res_hi <= tol_abs) {
                return Ok(RitzExtremes { lowest: lo, highest: hi, steps: k });
            }
            if k >= max_steps {
                return Err(BiotError::Eigen(format!(
                    "Lanczos stagnated after {k} steps (residuals {res_lo:.3e}, {res_hi:.3e})"
                )));
            }
        }
        betas.push(beta);
        v = w.iter().map(|x| x / beta).collect();
        mv = mw.iter().map(|x| x / beta).collect();
    }
}

/// Eigenvalues (ascending) of the symmetric tridiagonal matrix and the last
/// component of each normalized eigenvector.
fn tridiag_eigs(alphas: &[f64], betas: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = alphas.len();
    let t = Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let evd = t.self_adjoint_eigen(Side::Lower).map_err(|e| BiotError::Eigen(format!("{e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let mut pairs: Vec<(f64, f64)> = (0..k).map(|i| (s[i], u[(k - 1, i)])).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}

/// Extreme eigenvalue moduli of `system · x = λ · norm · x` (`norm` defaults
/// to the identity). `norm` must be symmetric positive definite.
pub fn extreme_eigs(system: &CsrMatrix, norm: Option<&CsrMatrix>, mode: EigMode) -> Result<SpectrumBounds> {
    let dim = system.nrows();
    if system.ncols() != dim {
        return Err(BiotError::DimensionMismatch { expected: dim, got: system.ncols() });
    }
    if let Some(q) = norm {
        if q.nrows() != dim || q.ncols() != dim {
            return Err(BiotError::DimensionMismatch { expected: dim, got: q.nrows() });
        }
    }
    if system.values().iter().any(|v| !v.is_finite()) || norm.is_some_and(|q| q.values().iter().any(|v| !v.is_finite()))
    {
        return Err(BiotError::Eigen("non-finite matrix entry".into()));
    }
    match mode {
        EigMode::Dense => dense_extremes(system, norm),
        EigMode::Lanczos => lanczos_pencil(system, norm),
    }
}

fn dense_extremes(system: &CsrMatrix, norm: Option<&CsrMatrix>) -> Result<SpectrumBounds> {
    let dim = system.nrows();
    if dim > DENSE_MAX_DIM {
        return Err(BiotError::Eigen(format!("dense mode limited to dimension {DENSE_MAX_DIM}, got {dim}")));
    }
    let values = generalized_eigenvalues(system, norm)?;
    bounds_from(&values)
}

/// All eigenvalues of the symmetric pencil `(S, Q)` by dense reduction
/// `L⁻¹ S L⁻ᵀ` with `Q = L Lᵀ`.
pub fn generalized_eigenvalues(system: &CsrMatrix, norm: Option<&CsrMatrix>) -> Result<Vec<f64>> {
    let mut s = system.to_dense();
    if let Some(q) = norm {
        let llt = q
            .to_dense()
            .llt(Side::Lower)
            .map_err(|e| BiotError::Factorization { block: "norm".into(), reason: format!("{e:?}") })?;
        let l = llt.L();
        l.solve_lower_triangular_in_place(s.as_mut());
        let mut st = s.transpose().to_owned();
        l.solve_lower_triangular_in_place(st.as_mut());
        s = st;
    }
    let n = s.nrows();
    let sym = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]));
    let mut values = sym.self_adjoint_eigenvalues(Side::Lower).map_err(|e| BiotError::Eigen(format!("{e:?}")))?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn bounds_from(values: &[f64]) -> Result<SpectrumBounds> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(BiotError::Eigen("non-finite eigenvalue".into()));
    }
    let min_abs = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(SpectrumBounds { min_abs, max_abs })
}

fn lanczos_pencil(system: &CsrMatrix, norm: Option<&CsrMatrix>) -> Result<SpectrumBounds> {
    let dim = system.nrows();
    let identity;
    let q = match norm {
        Some(q) => q,
        None => {
            identity = CsrMatrix::identity(dim);
            &identity
        }
    };
    let q_fac = SpdFactor::new(q, "norm")?;
    let s_lu = SparseLu::new(system, "system")?;
    let apply_q = |x: &[f64], y: &mut [f64]| q.spmv_into(x, y);

    let forward = lanczos_extremes(
        dim,
        |x, y| {
            system.spmv_into(x, y)?;
            q_fac.solve_in_place(y)
        },
        apply_q,
        LANCZOS_TOL,
        LANCZOS_MAX_STEPS,
    )?;
    let inverse = lanczos_extremes(
        dim,
        |x, y| {
            q.spmv_into(x, y)?;
            let z = s_lu.solve(y)?;
            y.copy_from_slice(&z);
            Ok(())
        },
        apply_q,
        LANCZOS_TOL,
        LANCZOS_MAX_STEPS,
    )?;
    let max_abs = forward.lowest.abs().max(forward.highest.abs());
    let inv_max = inverse.lowest.abs().max(inverse.highest.abs());
    if !(inv_max > 0.0 && inv_max.is_finite()) {
        return Err(BiotError::Eigen("inverse iteration produced no spectrum".into()));
    }
    Ok(SpectrumBounds { min_abs: 1.0 / inv_max, max_abs })
}
