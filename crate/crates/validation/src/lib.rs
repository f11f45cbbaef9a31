//! Helpers shared by the acceptance checks: outcome reporting, band tests
//! and small dense oracles.

use std::fmt;
use std::time::Instant;

use biot_precond::CsrMatrix;
use faer::linalg::solvers::Solve;
use faer::Mat;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub label: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {} [{:.1}s]", self.label, self.detail, self.seconds)
    }
}

/// Runs `check`, timing it; an `Err` counts as a failure.
pub fn run_check<F>(label: impl Into<String>, check: F) -> Outcome
where
    F: FnOnce() -> Result<(bool, String), String>,
{
    let t = Instant::now();
    let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
    Outcome { label: label.into(), pass, detail, seconds: t.elapsed().as_secs_f64() }
}

/// Closed-interval membership.
pub fn within(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo && x <= hi
}

/// `max / min` of a non-empty slice of positive values.
pub fn spread_ratio(values: &[f64]) -> f64 {
    let (lo, hi) = values.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi / lo
}

pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Dense partial-pivoting LU solve.
pub fn dense_solve(a: &CsrMatrix, b: &[f64]) -> Vec<f64> {
    let lu = a.to_dense().partial_piv_lu();
    let x = lu.solve(Mat::from_fn(b.len(), 1, |i, _| b[i]));
    (0..b.len()).map(|i| x[(i, 0)]).collect()
}

pub fn relative_error(x: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = x.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = reference.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}
