//! Stability diagnostics: discrete inf-sup constants, preconditioned
//! condition numbers and the bundled `ξβ` material data.

use std::fmt;
use std::str::FromStr;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::assembly::{BlockOperator, Formulation, MaterialParams, ReferenceSystem};
use crate::elements::CellGeometry;
use crate::error::{BiotError, Result};
use crate::linalg::{extreme_eigs, CsrMatrix, EigMode, LinearOperator, SpdFactor, SpectrumBounds};
use crate::mesh::{BoundaryTag, Mesh};
use crate::preconditioners::{select_beta, BetaRule, PrecKind, Preconditioner};

/// Largest mesh parameter accepted by [`estimate_infsup`].
pub const INFSUP_MAX_N: usize = 8;
/// Eigenvalues below this fraction of the largest one count as kernel modes.
pub const KERNEL_CUTOFF: f64 = 1e-10;

const MATERIALS_CSV: &str = include_str!("../data/materials.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InfSupPair {
    /// P2 displacement against P0 pressure in the elasticity norm.
    Up,
    /// Lowest-order RT flux against P0 pressure in the `H(div)` norm.
    Vp,
    /// Combined `(u, v)` against P0 pressure in the augmented norm.
    Bii,
    /// Vector P1 displacement against P0 pressure: a known unstable pair.
    P1P0,
}

impl InfSupPair {
    pub const ALL: [InfSupPair; 4] = [InfSupPair::Up, InfSupPair::Vp, InfSupPair::Bii, InfSupPair::P1P0];

    pub fn as_str(self) -> &'static str {
        match self {
            InfSupPair::Up => "up",
            InfSupPair::Vp => "vp",
            InfSupPair::Bii => "bii",
            InfSupPair::P1P0 => "p1p0",
        }
    }
}

impl fmt::Display for InfSupPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InfSupPair {
    type Err = BiotError;

    fn from_str(s: &str) -> Result<Self> {
        InfSupPair::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| BiotError::Config(format!("unknown inf-sup pair {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfSupEstimate {
    pub pair: InfSupPair,
    pub n: usize,
    pub h: f64,
    pub gamma: f64,
}

/// Discrete inf-sup constant `γ_h = sqrt(σ_min)` of `B N_u⁻¹ Bᵀ q = σ N_p q`,
/// where `σ_min` is the smallest eigenvalue above the kernel cutoff.
pub fn estimate_infsup(pair: InfSupPair, mesh: &Mesh, params: &MaterialParams) -> Result<InfSupEstimate> {
    if mesh.n() > INFSUP_MAX_N {
        return Err(BiotError::InvalidParameter(format!(
            "inf-sup estimation is limited to n <= {INFSUP_MAX_N}, got {}",
            mesh.n()
        )));
    }
    let reference = ReferenceSystem::new(mesh, Formulation::ThreeField)?;
    let (op, _) = reference.instantiate(params)?;
    let BlockOperator::ThreeField { blocks, dofs, .. } = &op else { unreachable!() };
    let elastic = select_beta(BetaRule::MaxMuLambda, params);
    let m_p = blocks.m_p.diagonal_values();

    let free = |mask: &[bool]| -> Vec<usize> { (0..mask.len()).filter(|&i| !mask[i]).collect() };
    let all_p: Vec<usize> = (0..dofs.num_p()).collect();
    let (b, n_u, n_p): (CsrMatrix, CsrMatrix, Vec<f64>) = match pair {
        InfSupPair::Up => {
            let fu = free(dofs.fixed_u());
            (
                blocks.b_u.submatrix(&all_p, &fu),
                blocks.a_u.submatrix(&fu, &fu),
                m_p.iter().map(|m| m / elastic).collect(),
            )
        }
        InfSupPair::Vp => {
            let fv = free(dofs.fixed_v());
            let w: Vec<f64> = m_p.iter().map(|m| 1.0 / m).collect();
            let hdiv = blocks.m_v.linear_combination(1.0, &blocks.b_v.gram_diag(&w)?, 1.0)?;
            (blocks.b_v.submatrix(&all_p, &fv), hdiv.submatrix(&fv, &fv), m_p.clone())
        }
        InfSupPair::Bii => {
            let beta = select_beta(BetaRule::MinOfBoth, params);
            let w: Vec<f64> = m_p.iter().map(|m| 1.0 / m).collect();
            let av = blocks.a_v.linear_combination(1.0, &blocks.b_v.gram_diag(&w)?, beta)?;
            let n = CsrMatrix::from_blocks(&[vec![Some(&blocks.a_u), None], vec![None, Some(&av)]])?;
            let bb = CsrMatrix::from_blocks(&[vec![Some(&blocks.b_u), Some(&blocks.b_v)]])?;
            let mut mask = dofs.fixed_u().to_vec();
            mask.extend_from_slice(dofs.fixed_v());
            let f = free(&mask);
            (bb.submatrix(&all_p, &f), n.submatrix(&f, &f), m_p.iter().map(|m| m / beta).collect())
        }
        InfSupPair::P1P0 => {
            let (a, bu, fixed) = vector_p1_blocks(mesh, params)?;
            let fu = free(&fixed);
            (bu.submatrix(&all_p, &fu), a.submatrix(&fu, &fu), m_p.iter().map(|m| m / elastic).collect())
        }
    };
    let gamma = smallest_nonzero_singular(&b, &n_u, &n_p)?;
    Ok(InfSupEstimate { pair, n: mesh.n(), h: mesh.h(), gamma })
}

/// `sqrt` of the smallest non-kernel eigenvalue of `B N⁻¹ Bᵀ q = σ diag(d) q`.
fn smallest_nonzero_singular(b: &CsrMatrix, n: &CsrMatrix, d: &[f64]) -> Result<f64> {
    let fac = SpdFactor::new(n, "norm")?;
    let bt = b.transpose();
    let np = b.nrows();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(np);
    let mut e = vec![0.0; np];
    for j in 0..np {
        e[j] = 1.0;
        let mut x = bt.spmv(&e)?;
        fac.solve_in_place(&mut x)?;
        cols.push(b.spmv(&x)?);
        e[j] = 0.0;
    }
    let scaled = Mat::<f64>::from_fn(np, np, |i, j| 0.5 * (cols[j][i] + cols[i][j]) / (d[i] * d[j]).sqrt());
    let values = scaled.self_adjoint_eigenvalues(Side::Lower).map_err(|e| BiotError::Eigen(format!("{e:?}")))?;
    let top = values.iter().fold(0.0f64, |m, v| m.max(*v));
    if !(top > 0.0 && top.is_finite()) {
        return Err(BiotError::Eigen("coupling operator has no positive spectrum".into()));
    }
    let sigma = values.iter().copied().filter(|v| *v > KERNEL_CUTOFF * top).fold(f64::INFINITY, f64::min);
    Ok(sigma.sqrt())
}

/// Vector P1 elasticity matrix, P0 divergence block and clamped mask.
fn vector_p1_blocks(mesh: &Mesh, params: &MaterialParams) -> Result<(CsrMatrix, CsrMatrix, Vec<bool>)> {
    let nv = mesh.num_vertices();
    let (mu, lambda) = (params.mu(), params.lambda());
    let mut ta = Vec::new();
    let mut tb = Vec::new();
    for cell in 0..mesh.num_cells() {
        let g = CellGeometry::new(mesh.cell_coords(cell), [1, 1, 1])?;
        let verts = mesh.cells()[cell];
        // local dof 2a + c: vertex a, component c; gradients are constant
        let mut eps = [[[0.0; 2]; 2]; 6];
        let mut div = [0.0; 6];
        for a in 0..3 {
            for c in 0..2 {
                let k = 2 * a + c;
                let gr = g.grad_lambda[a];
                let mut jac = [[0.0; 2]; 2];
                jac[c] = gr;
                eps[k] = [[jac[0][0], 0.5 * (jac[0][1] + jac[1][0])], [0.5 * (jac[0][1] + jac[1][0]), jac[1][1]]];
                div[k] = gr[c];
            }
        }
        for i in 0..6 {
            let gi = 2 * verts[i / 2] + i % 2;
            for j in 0..6 {
                let gj = 2 * verts[j / 2] + j % 2;
                let ee: f64 =
                    (0..2).flat_map(|r| (0..2).map(move |s| (r, s))).map(|(r, s)| eps[i][r][s] * eps[j][r][s]).sum();
                ta.push((gi, gj, g.area * (2.0 * mu * ee + lambda * div[i] * div[j])));
            }
            tb.push((cell, gi, g.area * div[i]));
        }
    }
    let mut fixed = vec![false; 2 * nv];
    for (e, _) in mesh.boundary_facets(BoundaryTag::Clamped) {
        for v in mesh.edges()[e] {
            fixed[2 * v] = true;
            fixed[2 * v + 1] = true;
        }
    }
    Ok((CsrMatrix::from_triplets(2 * nv, 2 * nv, &ta), CsrMatrix::from_triplets(mesh.num_cells(), 2 * nv, &tb), fixed))
}

/// Extreme eigenvalue moduli of `P·S` on the unconstrained DOFs.
pub fn spectrum_bounds(system: &BlockOperator, prec: &Preconditioner, mode: EigMode) -> Result<SpectrumBounds> {
    let free = system.dofs().free_indices();
    let s = system.monolithic().submatrix(&free, &free);
    if prec.kind() == PrecKind::None {
        return extreme_eigs(&s, None, mode);
    }
    if prec.dim() != system.dim() {
        return Err(BiotError::DimensionMismatch { expected: system.dim(), got: prec.dim() });
    }
    let q = prec.matrix().submatrix(&free, &free);
    extreme_eigs(&s, Some(&q), mode)
}

/// `max|λ| / min|λ|` of the preconditioned operator on the unconstrained DOFs.
pub fn condition_number(system: &BlockOperator, prec: &Preconditioner, mode: EigMode) -> Result<f64> {
    Ok(spectrum_bounds(system, prec, mode)?.condition_number())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialEntry {
    pub name: String,
    pub xi_beta: f64,
}

/// The bundled `ξβ` values of common poroelastic rocks.
pub fn materials_table() -> Vec<MaterialEntry> {
    csv::Reader::from_reader(MATERIALS_CSV.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<MaterialEntry>, _>>()
        .expect("bundled materials table is well formed")
}
