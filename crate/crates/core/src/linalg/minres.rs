use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{dot, LinearOperator};
use crate::error::{BiotError, Result};

pub const DEFAULT_RTOL: f64 = 1e-8;
pub const DEFAULT_MAXITER: usize = 500;

/// Outcome of a Krylov solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// Preconditioned residual norms relative to the initial one; the first
    /// entry is always 1.
    pub history: Vec<f64>,
    pub wall_time_s: f64,
}

/// Preconditioned MINRES from a zero initial guess.
///
/// `p` must be symmetric positive definite; an indefinite preconditioner is
/// detected when `r·Pr < 0`. Stops once the preconditioned residual drops
/// below `rtol` times its initial value.
pub fn minres(
    a: &dyn LinearOperator,
    p: &dyn LinearOperator,
    b: &[f64],
    rtol: f64,
    maxiter: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    if b.len() != n {
        return Err(BiotError::DimensionMismatch { expected: n, got: b.len() });
    }
    if p.dim() != n {
        return Err(BiotError::DimensionMismatch { expected: n, got: p.dim() });
    }
    if !(rtol > 0.0) {
        return Err(BiotError::InvalidParameter(format!("rtol must be positive, got {rtol}")));
    }
    let start = Instant::now();
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = vec![0.0; n];
    p.apply(&r1, &mut y)?;
    let beta1_sq = dot(&r1, &y);
    if beta1_sq < 0.0 {
        return Err(BiotError::IndefinitePreconditioner { iteration: 0, value: beta1_sq });
    }
    let mut history = vec![1.0];
    if beta1_sq == 0.0 {
        let report =
            SolveReport { iterations: 0, converged: true, history, wall_time_s: start.elapsed().as_secs_f64() };
        return Ok((x, report));
    }
    let beta1 = beta1_sq.sqrt();

    let mut r2 = r1.clone();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln) = (0.0f64, 0.0f64);
    let mut phibar = beta1;
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut converged = false;

    for itn in 1..=maxiter {
        let s = 1.0 / beta;
        v.iter_mut().zip(&y).for_each(|(vi, yi)| *vi = s * yi);
        a.apply(&v, &mut y)?;
        if itn >= 2 {
            let f = beta / oldb;
            y.iter_mut().zip(&r1).for_each(|(yi, ri)| *yi -= f * ri);
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        y.iter_mut().zip(&r2).for_each(|(yi, ri)| *yi -= f * ri);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        p.apply(&r2, &mut y)?;
        oldb = beta;
        let beta_sq = dot(&r2, &y);
        if beta_sq < 0.0 {
            return Err(BiotError::IndefinitePreconditioner { iteration: itn, value: beta_sq });
        }
        beta = beta_sq.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta);
        if !gamma.is_finite() || gamma == 0.0 {
            return Err(BiotError::Breakdown { iteration: itn, reason: format!("rotation norm {gamma}") });
        }
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        if !phibar.is_finite() {
            return Err(BiotError::Breakdown { iteration: itn, reason: "non-finite residual".into() });
        }
        history.push(phibar / beta1);
        if phibar <= rtol * beta1 {
            converged = true;
            break;
        }
        if beta == 0.0 {
            return Err(BiotError::Breakdown {
                iteration: itn,
                reason: "Lanczos vector vanished before convergence".into(),
            });
        }
    }
    let report =
        SolveReport { iterations: history.len() - 1, converged, history, wall_time_s: start.elapsed().as_secs_f64() };
    Ok((x, report))
}
