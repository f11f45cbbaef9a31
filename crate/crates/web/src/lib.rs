//! WebAssembly bindings for the footing demo page in `www/`.
//!
//! Each exported function has a plain Rust counterpart (`*_impl`) so the
//! logic is testable on native targets.

use biot_precond::analysis::condition_number as preconditioned_condition;
use biot_precond::assembly::{BlockOperator, Formulation, MaterialParams, ReferenceSystem};
use biot_precond::linalg::{minres, EigMode, DEFAULT_MAXITER, DEFAULT_RTOL};
use biot_precond::mesh::{build_structured_mesh, Mesh};
use biot_precond::preconditioners::select_beta as beta_for;
use biot_precond::{BetaRule, BiotError, PrecKind, PreconditionerSpec, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest mesh the demo accepts for a solve.
pub const MAX_SOLVE_N: usize = 48;
/// Largest mesh the demo accepts for a condition-number estimate.
pub const MAX_COND_N: usize = 16;

#[derive(Debug, Serialize)]
pub struct FootingSolution {
    pub n: usize,
    pub prec: String,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
    pub beta: Option<f64>,
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<[usize; 3]>,
    /// Vertex displacements `(u_x, u_y)`.
    pub displacement: Vec<[f64; 2]>,
    /// Physical pore pressure averaged per cell.
    pub pressure: Vec<f64>,
}

fn params(young: f64, nu: f64, kappa: f64) -> Result<MaterialParams> {
    MaterialParams::footing(young, nu, kappa)
}

fn check_n(n: usize, max: usize) -> Result<()> {
    if n > max {
        return Err(BiotError::InvalidParameter(format!("mesh size {n} exceeds the demo limit {max}")));
    }
    Ok(())
}

pub fn select_beta_impl(rule: &str, young: f64, nu: f64, kappa: f64) -> Result<f64> {
    let rule = match rule.to_ascii_lowercase().as_str() {
        "max" | "max_mu_lambda" => BetaRule::MaxMuLambda,
        "kappa" => BetaRule::Kappa,
        "min" | "min_of_both" => BetaRule::MinOfBoth,
        other => return Err(BiotError::Config(format!("unknown beta rule {other:?}"))),
    };
    Ok(beta_for(rule, &params(young, nu, kappa)?))
}

fn system(mesh: &Mesh, kind: PrecKind, p: &MaterialParams) -> Result<(BlockOperator, Vec<f64>)> {
    let formulation = kind.formulation().unwrap_or(Formulation::ThreeField);
    ReferenceSystem::new(mesh, formulation)?.instantiate(p)
}

pub fn solve_footing_impl(n: usize, prec: &str, young: f64, nu: f64, kappa: f64) -> Result<FootingSolution> {
    check_n(n, MAX_SOLVE_N)?;
    let kind: PrecKind = prec.parse()?;
    let p = params(young, nu, kappa)?;
    let mesh = build_structured_mesh(n)?;
    let (op, rhs) = system(&mesh, kind, &p)?;
    let pc = PreconditionerSpec::new(kind).build(&op)?;
    let (x, report) = minres(&op.monolithic(), &pc, &rhs, DEFAULT_RTOL, DEFAULT_MAXITER)?;

    let displacement = (0..mesh.num_vertices()).map(|v| [x[2 * v], x[2 * v + 1]]).collect();
    let sizes = op.block_sizes();
    let p_off: usize = sizes[..sizes.len() - 1].iter().sum();
    let p_sol = &x[p_off..];
    // the solved pressure unknown is −α·p
    let scale = -1.0 / p.alpha();
    let pressure = match op.formulation() {
        Formulation::ThreeField => p_sol.iter().map(|v| scale * v).collect(),
        Formulation::TwoField => {
            mesh.cells().iter().map(|c| scale * c.iter().map(|&v| p_sol[v]).sum::<f64>() / 3.0).collect()
        }
    };
    Ok(FootingSolution {
        n,
        prec: kind.to_string(),
        iterations: report.iterations,
        converged: report.converged,
        history: report.history,
        beta: pc.beta(),
        vertices: mesh.vertices().to_vec(),
        cells: mesh.cells().to_vec(),
        displacement,
        pressure,
    })
}

pub fn condition_number_impl(n: usize, prec: &str, young: f64, nu: f64, kappa: f64) -> Result<f64> {
    check_n(n, MAX_COND_N)?;
    let kind: PrecKind = prec.parse()?;
    let p = params(young, nu, kappa)?;
    let mesh = build_structured_mesh(n)?;
    let (op, _) = system(&mesh, kind, &p)?;
    let pc = PreconditionerSpec::new(kind).build(&op)?;
    preconditioned_condition(&op, &pc, EigMode::Lanczos)
}

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// β for the rule `"max"`, `"kappa"` or `"min"`.
#[wasm_bindgen]
pub fn select_beta(rule: &str, young: f64, nu: f64, kappa: f64) -> std::result::Result<f64, JsError> {
    select_beta_impl(rule, young, nu, kappa).map_err(js_err)
}

/// Solves the footing problem; returns the solution as a JSON string.
#[wasm_bindgen]
pub fn solve_footing(n: usize, prec: &str, young: f64, nu: f64, kappa: f64) -> std::result::Result<String, JsError> {
    let sol = solve_footing_impl(n, prec, young, nu, kappa).map_err(js_err)?;
    serde_json::to_string(&sol).map_err(js_err)
}

#[wasm_bindgen]
pub fn condition_number(n: usize, prec: &str, young: f64, nu: f64, kappa: f64) -> std::result::Result<f64, JsError> {
    condition_number_impl(n, prec, young, nu, kappa).map_err(js_err)
}
