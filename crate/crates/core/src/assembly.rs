//! Material parameters, degree-of-freedom maps and block operators of the
//! footing problem.
//!
//! Matrices are first assembled with unit coefficients ([`ReferenceSystem`])
//! and then combined for each material point, so a parameter sweep assembles
//! every mesh only once.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::elements::{eval_basis, quadrature_rule, CellGeometry, ElementKind};
use crate::error::{BiotError, Result};
use crate::linalg::{par_map, CsrMatrix};
use crate::mesh::{BoundaryTag, Mesh};

/// Magnitude of the normal traction applied on the loaded part of the top boundary.
pub const FOOTING_LOAD: f64 = -1.0e4;

/// Poroelastic material and time-step data.
///
/// Derived quantities (`μ`, `λ`, `κ`, `ξ`) are computed on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    young: f64,
    poisson: f64,
    alpha: f64,
    mobility: f64,
    storage: f64,
    dt: f64,
}

impl MaterialParams {
    pub fn new(young: f64, poisson: f64, alpha: f64, mobility: f64, storage: f64, dt: f64) -> Result<Self> {
        let bad = |what: &str, v: f64| Err(BiotError::InvalidParameter(format!("{what} = {v}")));
        if !(young > 0.0 && young.is_finite()) {
            return bad("E must be positive; E", young);
        }
        if !(0.0..0.5).contains(&poisson) {
            return bad("Poisson ratio must satisfy 0 <= nu < 0.5; nu", poisson);
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return bad("alpha must be positive; alpha", alpha);
        }
        if !(mobility > 0.0 && mobility.is_finite()) {
            return bad("mobility must be positive; k", mobility);
        }
        if !(storage >= 0.0 && storage.is_finite()) {
            return bad("storage must be non-negative; S", storage);
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return bad("time step must be positive; dt", dt);
        }
        Ok(MaterialParams { young, poisson, alpha, mobility, storage, dt })
    }

    /// Footing configuration: `α = 1`, `Δt = 1`, `S = 0`, `k = 1/κ`.
    pub fn footing(young: f64, poisson: f64, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(BiotError::InvalidParameter(format!("kappa must be positive; kappa = {kappa}")));
        }
        Self::new(young, poisson, 1.0, 1.0 / kappa, 0.0, 1.0)
    }

    pub fn with_storage(self, storage: f64) -> Result<Self> {
        Self::new(self.young, self.poisson, self.alpha, self.mobility, storage, self.dt)
    }

    pub fn young(&self) -> f64 {
        self.young
    }

    pub fn poisson(&self) -> f64 {
        self.poisson
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mobility(&self) -> f64 {
        self.mobility
    }

    pub fn storage(&self) -> f64 {
        self.storage
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mu(&self) -> f64 {
        self.young / (2.0 * (1.0 + self.poisson))
    }

    pub fn lambda(&self) -> f64 {
        self.poisson * self.young / ((1.0 + self.poisson) * (1.0 - 2.0 * self.poisson))
    }

    pub fn kappa(&self) -> f64 {
        self.alpha * self.alpha / (self.dt * self.mobility)
    }

    pub fn xi(&self) -> f64 {
        self.storage / (self.alpha * self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formulation {
    #[serde(rename = "two-field")]
    TwoField,
    #[serde(rename = "three-field")]
    ThreeField,
}

impl Formulation {
    pub fn name(self) -> &'static str {
        match self {
            Formulation::TwoField => "two-field",
            Formulation::ThreeField => "three-field",
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formulation {
    type Err = BiotError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "two-field" | "two" | "2" => Ok(Formulation::TwoField),
            "three-field" | "three" | "3" => Ok(Formulation::ThreeField),
            _ => Err(BiotError::Config(format!("unknown formulation {s:?}"))),
        }
    }
}

/// Global numbering of each field and its constrained DOFs.
///
/// Displacement DOF of P2 node `m` and component `c` is `2m + c`, where
/// vertices come first and edge midpoints follow (`num_vertices + edge`).
/// Flux DOFs are edges; pressure DOFs are cells (P0) or vertices (P1).
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    formulation: Formulation,
    fixed_u: Vec<bool>,
    fixed_v: Vec<bool>,
    fixed_p: Vec<bool>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, formulation: Formulation) -> Self {
        let nv = mesh.num_vertices();
        let mut fixed_u = vec![false; 2 * (nv + mesh.num_edges())];
        for (e, _) in mesh.boundary_facets(BoundaryTag::Clamped) {
            let [a, b] = mesh.edges()[e];
            for node in [a, b, nv + e] {
                fixed_u[2 * node] = true;
                fixed_u[2 * node + 1] = true;
            }
        }
        let (fixed_v, fixed_p) = match formulation {
            Formulation::ThreeField => {
                let mut fv = vec![false; mesh.num_edges()];
                for tag in [BoundaryTag::Clamped, BoundaryTag::Gamma1] {
                    for (e, _) in mesh.boundary_facets(tag) {
                        fv[e] = true;
                    }
                }
                (fv, vec![false; mesh.num_cells()])
            }
            Formulation::TwoField => {
                let mut fp = vec![false; nv];
                for (e, _) in mesh.boundary_facets(BoundaryTag::Gamma2) {
                    for v in mesh.edges()[e] {
                        fp[v] = true;
                    }
                }
                (Vec::new(), fp)
            }
        };
        DofMap { formulation, fixed_u, fixed_v, fixed_p }
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn num_u(&self) -> usize {
        self.fixed_u.len()
    }

    pub fn num_v(&self) -> usize {
        self.fixed_v.len()
    }

    pub fn num_p(&self) -> usize {
        self.fixed_p.len()
    }

    pub fn u_dof(node: usize, comp: usize) -> usize {
        2 * node + comp
    }

    pub fn fixed_u(&self) -> &[bool] {
        &self.fixed_u
    }

    pub fn fixed_v(&self) -> &[bool] {
        &self.fixed_v
    }

    pub fn fixed_p(&self) -> &[bool] {
        &self.fixed_p
    }

    /// Block sizes in monolithic order (`[u, p]` or `[u, v, p]`).
    pub fn block_sizes(&self) -> Vec<usize> {
        match self.formulation {
            Formulation::TwoField => vec![self.num_u(), self.num_p()],
            Formulation::ThreeField => vec![self.num_u(), self.num_v(), self.num_p()],
        }
    }

    pub fn total(&self) -> usize {
        self.block_sizes().iter().sum()
    }

    /// Constrained flags over the monolithic numbering.
    pub fn fixed_mask(&self) -> Vec<bool> {
        let mut m = self.fixed_u.clone();
        if self.formulation == Formulation::ThreeField {
            m.extend_from_slice(&self.fixed_v);
        }
        m.extend_from_slice(&self.fixed_p);
        m
    }

    pub fn free_indices(&self) -> Vec<usize> {
        self.fixed_mask().iter().enumerate().filter(|(_, f)| !**f).map(|(i, _)| i).collect()
    }
}

/// Sparse blocks of the three-field system `[[A_u, 0, B_uᵀ], [0, A_v, B_vᵀ], [B_u, B_v, −C_p]]`.
#[derive(Debug, Clone)]
pub struct ThreeFieldBlocks {
    pub a_u: CsrMatrix,
    pub a_v: CsrMatrix,
    pub b_u: CsrMatrix,
    pub b_v: CsrMatrix,
    pub c_p: CsrMatrix,
    pub m_p: CsrMatrix,
    pub m_v: CsrMatrix,
}

/// Sparse blocks of the two-field system `[[A_u, B_uᵀ], [B_u, −A_p]]`.
#[derive(Debug, Clone)]
pub struct TwoFieldBlocks {
    pub a_u: CsrMatrix,
    pub b_u: CsrMatrix,
    pub a_p: CsrMatrix,
    pub m_p: CsrMatrix,
}

/// Assembled saddle-point system with constraints already eliminated.
#[derive(Debug, Clone)]
pub enum BlockOperator {
    TwoField { blocks: TwoFieldBlocks, dofs: DofMap, params: MaterialParams },
    ThreeField { blocks: ThreeFieldBlocks, dofs: DofMap, params: MaterialParams },
}

impl BlockOperator {
    pub fn formulation(&self) -> Formulation {
        self.dofs().formulation()
    }

    pub fn dofs(&self) -> &DofMap {
        match self {
            BlockOperator::TwoField { dofs, .. } | BlockOperator::ThreeField { dofs, .. } => dofs,
        }
    }

    pub fn params(&self) -> &MaterialParams {
        match self {
            BlockOperator::TwoField { params, .. } | BlockOperator::ThreeField { params, .. } => params,
        }
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.dofs().block_sizes()
    }

    pub fn dim(&self) -> usize {
        self.dofs().total()
    }

    pub fn monolithic(&self) -> CsrMatrix {
        match self {
            BlockOperator::TwoField { blocks: b, .. } => {
                let but = b.b_u.transpose();
                let neg = b.a_p.scaled(-1.0);
                CsrMatrix::from_blocks(&[vec![Some(&b.a_u), Some(&but)], vec![Some(&b.b_u), Some(&neg)]])
            }
            BlockOperator::ThreeField { blocks: b, .. } => {
                let but = b.b_u.transpose();
                let bvt = b.b_v.transpose();
                let neg = b.c_p.scaled(-1.0);
                CsrMatrix::from_blocks(&[
                    vec![Some(&b.a_u), None, Some(&but)],
                    vec![None, Some(&b.a_v), Some(&bvt)],
                    vec![Some(&b.b_u), Some(&b.b_v), Some(&neg)],
                ])
            }
        }
        .expect("block sizes are consistent by construction")
    }

    /// Matrix Market dump of the monolithic matrix.
    pub fn to_matrix_market(&self) -> String {
        self.monolithic().to_matrix_market_symmetric()
    }
}

/// Unit-coefficient matrices of one mesh, before constraints are applied.
///
/// `k_eps` assembles `2(ε(u), ε(φ))` and `k_div` assembles `(div u, div φ)`,
/// so `A_u = μ·k_eps + λ·k_div`.
#[derive(Debug, Clone)]
pub struct ReferenceSystem {
    pub dofs: DofMap,
    pub k_eps: CsrMatrix,
    pub k_div: CsrMatrix,
    /// `(div u, q)` against the pressure space.
    pub b_u: CsrMatrix,
    /// RT mass matrix (three-field only, otherwise empty).
    pub m_v: CsrMatrix,
    /// `(div v, q)` (three-field only, otherwise empty).
    pub b_v: CsrMatrix,
    pub m_p: CsrMatrix,
    /// `(∇p, ∇q)` (two-field only, otherwise empty).
    pub lap_p: CsrMatrix,
    /// Traction load on the displacement block (unconstrained).
    pub load_u: Vec<f64>,
}

fn cell_geometry(mesh: &Mesh, cell: usize) -> Result<CellGeometry> {
    let signs = mesh.cell_edges()[cell].map(|(_, s)| s);
    CellGeometry::new(mesh.cell_coords(cell), signs).map_err(|e| match e {
        BiotError::DegenerateCell { area, .. } => BiotError::DegenerateCell { cell, area },
        other => other,
    })
}

fn p2_dofs(mesh: &Mesh, cell: usize) -> [usize; 12] {
    let nv = mesh.num_vertices();
    let verts = mesh.cells()[cell];
    let edges = mesh.cell_edges()[cell];
    let mut out = [0; 12];
    for ln in 0..6 {
        let node = if ln < 3 { verts[ln] } else { nv + edges[ln - 3].0 };
        out[2 * ln] = 2 * node;
        out[2 * ln + 1] = 2 * node + 1;
    }
    out
}

struct CellData {
    u: [usize; 12],
    k_eps: [[f64; 12]; 12],
    k_div: [[f64; 12]; 12],
    /// rows: pressure local dofs (1 or 3), cols: displacement local dofs
    b_u: Vec<[f64; 12]>,
    m_v: [[f64; 3]; 3],
    b_v: [f64; 3],
    m_p: Vec<Vec<f64>>,
    lap_p: Vec<Vec<f64>>,
}

fn cell_kernels(mesh: &Mesh, cell: usize, formulation: Formulation) -> Result<CellData> {
    let geom = cell_geometry(mesh, cell)?;
    let rule = quadrature_rule(2)?;
    let jac = 2.0 * geom.area;
    let np = match formulation {
        Formulation::ThreeField => 1,
        Formulation::TwoField => 3,
    };
    let mut d = CellData {
        u: p2_dofs(mesh, cell),
        k_eps: [[0.0; 12]; 12],
        k_div: [[0.0; 12]; 12],
        b_u: vec![[0.0; 12]; np],
        m_v: [[0.0; 3]; 3],
        b_v: [0.0; 3],
        m_p: vec![vec![0.0; np]; np],
        lap_p: vec![vec![0.0; np]; np],
    };
    let pkind = match formulation {
        Formulation::ThreeField => ElementKind::ScalarP0,
        Formulation::TwoField => ElementKind::ScalarP1,
    };
    for (bary, &w) in rule.points.iter().zip(&rule.weights) {
        let wq = w * jac;
        let u = eval_basis(ElementKind::VectorP2, bary, &geom);
        let p = eval_basis(pkind, bary, &geom);
        for i in 0..12 {
            let ei = &u.sym_gradients[i];
            for j in 0..12 {
                let ej = &u.sym_gradients[j];
                let eps = ei[0][0] * ej[0][0] + 2.0 * ei[0][1] * ej[0][1] + ei[1][1] * ej[1][1];
                d.k_eps[i][j] += wq * 2.0 * eps;
                d.k_div[i][j] += wq * u.divergence[i] * u.divergence[j];
            }
        }
        for a in 0..np {
            let q = p.values[a][0];
            for i in 0..12 {
                d.b_u[a][i] += wq * u.divergence[i] * q;
            }
            for b in 0..np {
                d.m_p[a][b] += wq * q * p.values[b][0];
                let (ga, gb) = (p.gradients[a][0], p.gradients[b][0]);
                d.lap_p[a][b] += wq * (ga[0] * gb[0] + ga[1] * gb[1]);
            }
        }
        if formulation == Formulation::ThreeField {
            let v = eval_basis(ElementKind::RtLowest, bary, &geom);
            for i in 0..3 {
                for j in 0..3 {
                    d.m_v[i][j] += wq * (v.values[i][0] * v.values[j][0] + v.values[i][1] * v.values[j][1]);
                }
                d.b_v[i] += wq * v.divergence[i];
            }
        }
    }
    Ok(d)
}

impl ReferenceSystem {
    pub fn new(mesh: &Mesh, formulation: Formulation) -> Result<Self> {
        let dofs = DofMap::new(mesh, formulation);
        let kernels = par_map(mesh.num_cells(), |c| cell_kernels(mesh, c, formulation));
        let kernels: Vec<CellData> = kernels.into_iter().collect::<Result<_>>()?;
        let (nu, nv, np) = (dofs.num_u(), dofs.num_v(), dofs.num_p());

        let mut t_eps = Vec::with_capacity(144 * kernels.len());
        let mut t_div = Vec::with_capacity(144 * kernels.len());
        let mut t_bu = Vec::new();
        let mut t_mv = Vec::new();
        let mut t_bv = Vec::new();
        let mut t_mp = Vec::new();
        let mut t_lap = Vec::new();
        for (cell, d) in kernels.iter().enumerate() {
            for i in 0..12 {
                for j in 0..12 {
                    t_eps.push((d.u[i], d.u[j], d.k_eps[i][j]));
                    t_div.push((d.u[i], d.u[j], d.k_div[i][j]));
                }
            }
            let pdofs: Vec<usize> = match formulation {
                Formulation::ThreeField => vec![cell],
                Formulation::TwoField => mesh.cells()[cell].to_vec(),
            };
            for (a, &pa) in pdofs.iter().enumerate() {
                for i in 0..12 {
                    t_bu.push((pa, d.u[i], d.b_u[a][i]));
                }
                for (b, &pb) in pdofs.iter().enumerate() {
                    t_mp.push((pa, pb, d.m_p[a][b]));
                    if formulation == Formulation::TwoField {
                        t_lap.push((pa, pb, d.lap_p[a][b]));
                    }
                }
            }
            if formulation == Formulation::ThreeField {
                let edges = mesh.cell_edges()[cell].map(|(e, _)| e);
                for i in 0..3 {
                    for j in 0..3 {
                        t_mv.push((edges[i], edges[j], d.m_v[i][j]));
                    }
                    t_bv.push((cell, edges[i], d.b_v[i]));
                }
            }
        }
        Ok(ReferenceSystem {
            k_eps: CsrMatrix::from_triplets(nu, nu, &t_eps),
            k_div: CsrMatrix::from_triplets(nu, nu, &t_div),
            b_u: CsrMatrix::from_triplets(np, nu, &t_bu),
            m_v: CsrMatrix::from_triplets(nv, nv, &t_mv),
            b_v: CsrMatrix::from_triplets(np, nv, &t_bv),
            m_p: CsrMatrix::from_triplets(np, np, &t_mp),
            lap_p: if formulation == Formulation::TwoField {
                CsrMatrix::from_triplets(np, np, &t_lap)
            } else {
                CsrMatrix::zeros(0, 0)
            },
            load_u: assemble_rhs_traction(mesh, FOOTING_LOAD),
            dofs,
        })
    }

    pub fn formulation(&self) -> Formulation {
        self.dofs.formulation()
    }

    /// Combines the reference matrices for one material point, eliminates
    /// constraints and returns the block operator with its right-hand side.
    pub fn instantiate(&self, params: &MaterialParams) -> Result<(BlockOperator, Vec<f64>)> {
        let dofs = self.dofs.clone();
        let (fu, fv, fp) = (dofs.fixed_u(), dofs.fixed_v(), dofs.fixed_p());
        let a_u =
            self.k_eps.linear_combination(params.mu(), &self.k_div, params.lambda())?.eliminate_symmetric(fu, 1.0);
        let b_u = self.b_u.zero_rows_cols(Some(fp), Some(fu));
        let m_p = self.m_p.eliminate_symmetric(fp, 1.0);
        let mut rhs: Vec<f64> = self.load_u.iter().zip(fu).map(|(&f, &fixed)| if fixed { 0.0 } else { f }).collect();
        let op = match self.formulation() {
            Formulation::ThreeField => {
                let m_v = self.m_v.eliminate_symmetric(fv, 1.0);
                let a_v = self.m_v.scaled(params.kappa()).eliminate_symmetric(fv, 1.0);
                let b_v = self.b_v.zero_rows_cols(None, Some(fv));
                let c_p = m_p.scaled(params.xi());
                rhs.resize(dofs.total(), 0.0);
                BlockOperator::ThreeField {
                    blocks: ThreeFieldBlocks { a_u, a_v, b_u, b_v, c_p, m_p, m_v },
                    dofs,
                    params: *params,
                }
            }
            Formulation::TwoField => {
                let a_p = self
                    .lap_p
                    .linear_combination(1.0 / params.kappa(), &self.m_p, params.xi())?
                    .eliminate_symmetric(fp, 1.0);
                rhs.resize(dofs.total(), 0.0);
                BlockOperator::TwoField { blocks: TwoFieldBlocks { a_u, b_u, a_p, m_p }, dofs, params: *params }
            }
        };
        Ok((op, rhs))
    }
}

/// Three-field system `[[A_u, 0, B_uᵀ], [0, A_v, B_vᵀ], [B_u, B_v, −C_p]]`
/// with its right-hand side and DOF map.
pub fn assemble_three_field(mesh: &Mesh, params: &MaterialParams) -> Result<(BlockOperator, Vec<f64>, DofMap)> {
    let (op, rhs) = ReferenceSystem::new(mesh, Formulation::ThreeField)?.instantiate(params)?;
    let dofs = op.dofs().clone();
    Ok((op, rhs, dofs))
}

/// Two-field Taylor–Hood system `[[A_u, B_uᵀ], [B_u, −A_p]]`.
pub fn assemble_two_field(mesh: &Mesh, params: &MaterialParams) -> Result<(BlockOperator, Vec<f64>, DofMap)> {
    let (op, rhs) = ReferenceSystem::new(mesh, Formulation::TwoField)?.instantiate(params)?;
    let dofs = op.dofs().clone();
    Ok((op, rhs, dofs))
}

/// Load vector of the normal traction `magnitude · n` on the loaded part of
/// the top boundary, over the P2 displacement DOFs.
pub fn assemble_rhs_traction(mesh: &Mesh, magnitude: f64) -> Vec<f64> {
    let nv = mesh.num_vertices();
    let mut f = vec![0.0; 2 * (nv + mesh.num_edges())];
    for (e, normal) in mesh.boundary_facets(BoundaryTag::Gamma1) {
        let len = mesh.edge_length(e);
        let [a, b] = mesh.edges()[e];
        // exact edge integrals of the quadratic Lagrange basis
        for (node, weight) in [(a, len / 6.0), (b, len / 6.0), (nv + e, 2.0 * len / 3.0)] {
            for c in 0..2 {
                f[DofMap::u_dof(node, c)] += magnitude * normal[c] * weight;
            }
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SpdFactor;
    use crate::mesh::build_structured_mesh;

    fn params() -> MaterialParams {
        MaterialParams::footing(3e4, 0.4, 1e3).unwrap()
    }

    #[test]
    fn lame_and_derived_values() {
        let p = MaterialParams::new(3e4, 0.2, 0.5, 4.0, 0.3, 0.25).unwrap();
        assert!((p.mu() - 1.25e4).abs() < 1e-9);
        assert!((p.lambda() - 3e4 * 0.2 / (1.2 * 0.6)).abs() < 1e-9);
        assert!((p.kappa() - 0.25).abs() < 1e-15);
        assert!((p.xi() - 1.2).abs() < 1e-15);
        assert!(MaterialParams::footing(1.0, 0.5, 1.0).is_err());
        assert!(MaterialParams::footing(-1.0, 0.3, 1.0).is_err());
        assert!(MaterialParams::footing(1.0, 0.3, 0.0).is_err());
        assert!(MaterialParams::new(1.0, 0.3, 1.0, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn formulation_strings() {
        assert_eq!("three-field".parse::<Formulation>().unwrap(), Formulation::ThreeField);
        assert_eq!("TWO_FIELD".parse::<Formulation>().unwrap(), Formulation::TwoField);
        assert_eq!(Formulation::TwoField.to_string(), "two-field");
        assert!("four".parse::<Formulation>().is_err());
    }

    #[test]
    fn zero_storage_gives_zero_c_p_and_diagonal_mass() {
        let mesh = build_structured_mesh(4).unwrap();
        let (op, _, _) = assemble_three_field(&mesh, &params()).unwrap();
        let BlockOperator::ThreeField { blocks, .. } = &op else { panic!() };
        assert_eq!(blocks.c_p.max_abs(), 0.0);
        assert!(blocks.m_p.is_diagonal());
        let trace: f64 = blocks.m_p.diagonal_values().iter().sum();
        assert!((trace - 64.0).abs() < 1e-12);
    }

    #[test]
    fn monolithic_symmetry() {
        let mesh = build_structured_mesh(2).unwrap();
        for p in [params(), MaterialParams::footing(3e6, 0.499, 1e7).unwrap().with_storage(0.7).unwrap()] {
            for op in [assemble_three_field(&mesh, &p).unwrap().0, assemble_two_field(&mesh, &p).unwrap().0] {
                let s = op.monolithic();
                assert!(s.symmetry_defect() <= 1e-13 * s.max_abs());
                assert_eq!(s.nrows(), op.dim());
            }
        }
    }

    #[test]
    fn traction_load_totals() {
        let mesh = build_structured_mesh(16).unwrap();
        let f = assemble_rhs_traction(&mesh, -1e4);
        let sum_y: f64 = f.iter().skip(1).step_by(2).sum();
        assert!((sum_y + 2e4).abs() < 1e-8);
        assert!(f.iter().step_by(2).all(|v| *v == 0.0));
        assert!(assemble_rhs_traction(&mesh, 0.0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn assembly_is_linear_in_coefficients() {
        let mesh = build_structured_mesh(4).unwrap();
        let r = ReferenceSystem::new(&mesh, Formulation::TwoField).unwrap();
        let p1 = MaterialParams::footing(3e4, 0.3, 10.0).unwrap();
        let p2 = MaterialParams::footing(6e4, 0.3, 100.0).unwrap();
        let (BlockOperator::TwoField { blocks: b1, .. }, _) = r.instantiate(&p1).unwrap() else { panic!() };
        let (BlockOperator::TwoField { blocks: b2, .. }, _) = r.instantiate(&p2).unwrap() else { panic!() };
        let fixed_u = r.dofs.fixed_u();
        let fixed_p = r.dofs.fixed_p();
        for i in 0..b1.a_u.nrows() {
            for (j, v) in b1.a_u.row(i) {
                if !fixed_u[i] && !fixed_u[j] {
                    assert!((b2.a_u.get(i, j) - 2.0 * v).abs() <= 1e-14 * v.abs().max(1.0));
                }
            }
        }
        for i in 0..b1.a_p.nrows() {
            for (j, v) in b1.a_p.row(i) {
                if !fixed_p[i] && !fixed_p[j] {
                    assert!((b2.a_p.get(i, j) - 0.1 * v).abs() <= 1e-14 * v.abs().max(1e-300));
                }
            }
        }
    }

    #[test]
    fn laplacian_kills_constants_away_from_the_drained_boundary() {
        let mesh = build_structured_mesh(4).unwrap();
        let (op, _, dofs) = assemble_two_field(&mesh, &params()).unwrap();
        let BlockOperator::TwoField { blocks, .. } = &op else { panic!() };
        let ones: Vec<f64> = dofs.fixed_p().iter().map(|f| if *f { 0.0 } else { 1.0 }).collect();
        let y = blocks.a_p.spmv(&ones).unwrap();
        for (i, yi) in y.iter().enumerate() {
            if !touches_fixed(&mesh, &dofs, i) && !dofs.fixed_p()[i] {
                assert!(yi.abs() < 1e-12, "row {i}: {yi}");
            }
        }
    }

    fn touches_fixed(mesh: &Mesh, dofs: &DofMap, vertex: usize) -> bool {
        mesh.edges().iter().any(|[a, b]| (*a == vertex && dofs.fixed_p()[*b]) || (*b == vertex && dofs.fixed_p()[*a]))
    }

    #[test]
    fn b_v_rows_hold_edge_lengths() {
        let mesh = build_structured_mesh(4).unwrap();
        let r = ReferenceSystem::new(&mesh, Formulation::ThreeField).unwrap();
        for cell in 0..mesh.num_cells() {
            let row: Vec<(usize, f64)> = r.b_v.row(cell).collect();
            assert_eq!(row.len(), 3);
            for (e, v) in row {
                assert!((v.abs() - mesh.edge_length(e)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn displacement_block_is_spd() {
        let mesh = build_structured_mesh(8).unwrap();
        let (op, _, _) = assemble_three_field(&mesh, &MaterialParams::footing(3e6, 0.499, 1.0).unwrap()).unwrap();
        let BlockOperator::ThreeField { blocks, .. } = &op else { panic!() };
        SpdFactor::new(&blocks.a_u, "A_u").unwrap();
        SpdFactor::new(&blocks.a_v, "A_v").unwrap();
    }

    #[test]
    fn patch_test_linear_displacement() {
        let mesh = build_structured_mesh(4).unwrap();
        let r = ReferenceSystem::new(&mesh, Formulation::ThreeField).unwrap();
        let p = MaterialParams::footing(1e3, 0.3, 1.0).unwrap();
        let (mu, lambda) = (p.mu(), p.lambda());
        let a_u = r.k_eps.linear_combination(mu, &r.k_div, lambda).unwrap();
        let grad = [[0.3, -0.7], [0.2, 0.5]];
        let nv = mesh.num_vertices();
        let mut node_xy: Vec<[f64; 2]> = mesh.vertices().to_vec();
        node_xy.extend((0..mesh.num_edges()).map(|e| mesh.edge_midpoint(e)));
        let mut u = vec![0.0; 2 * node_xy.len()];
        for (m, x) in node_xy.iter().enumerate() {
            for c in 0..2 {
                u[2 * m + c] = grad[c][0] * x[0] + grad[c][1] * x[1];
            }
        }
        let eps = [[grad[0][0], 0.5 * (grad[0][1] + grad[1][0])], [0.5 * (grad[0][1] + grad[1][0]), grad[1][1]]];
        let tr = eps[0][0] + eps[1][1];
        let sigma = [
            [2.0 * mu * eps[0][0] + lambda * tr, 2.0 * mu * eps[0][1]],
            [2.0 * mu * eps[1][0], 2.0 * mu * eps[1][1] + lambda * tr],
        ];
        let mut load = vec![0.0; u.len()];
        for tag in BoundaryTag::ALL {
            for (e, n) in mesh.boundary_facets(tag) {
                let len = mesh.edge_length(e);
                let [a, b] = mesh.edges()[e];
                let t = [sigma[0][0] * n[0] + sigma[0][1] * n[1], sigma[1][0] * n[0] + sigma[1][1] * n[1]];
                for (node, w) in [(a, len / 6.0), (b, len / 6.0), (nv + e, 2.0 * len / 3.0)] {
                    for c in 0..2 {
                        load[2 * node + c] += t[c] * w;
                    }
                }
            }
        }
        let au = a_u.spmv(&u).unwrap();
        let scale = load.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in au.iter().zip(&load) {
            assert!((x - y).abs() <= 1e-10 * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn matrix_market_export() {
        let mesh = build_structured_mesh(2).unwrap();
        let (op, _, _) = assemble_three_field(&mesh, &params()).unwrap();
        let text = op.to_matrix_market();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric\n"));
        let dims: Vec<usize> = text.lines().nth(1).unwrap().split(' ').map(|t| t.parse().unwrap()).collect();
        assert_eq!(dims[0], op.dim());
    }
}
