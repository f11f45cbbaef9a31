//! Block-diagonal preconditioners for the two- and three-field systems.
//!
//! Every preconditioner is the inverse of an assembled SPD block-diagonal
//! matrix `Q`; [`Preconditioner::apply`] solves with the sparse Cholesky
//! factors of its blocks.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assembly::{BlockOperator, Formulation, MaterialParams, ThreeFieldBlocks};
use crate::error::{BiotError, Result};
use crate::linalg::{par_map, CsrMatrix, LinearOperator, SpdFactor};

/// Above this value of `ξβ` the pressure scaling of `P2^III` is outside its
/// comfortable range; the build succeeds but records a note.
pub const XI_BETA_WARN: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PrecKind {
    None,
    PII,
    P1III,
    P2III,
    P3III,
    Ps,
    Uvs,
}

impl PrecKind {
    pub const ALL: [PrecKind; 7] =
        [PrecKind::None, PrecKind::PII, PrecKind::P1III, PrecKind::P2III, PrecKind::P3III, PrecKind::Ps, PrecKind::Uvs];

    pub fn as_str(self) -> &'static str {
        match self {
            PrecKind::None => "none",
            PrecKind::PII => "pII",
            PrecKind::P1III => "p1",
            PrecKind::P2III => "p2",
            PrecKind::P3III => "p3",
            PrecKind::Ps => "ps",
            PrecKind::Uvs => "uvs",
        }
    }

    /// The formulation a preconditioner applies to; `None` fits both.
    pub fn formulation(self) -> Option<Formulation> {
        match self {
            PrecKind::None => None,
            PrecKind::PII => Some(Formulation::TwoField),
            _ => Some(Formulation::ThreeField),
        }
    }

    pub fn default_beta_rule(self) -> BetaRule {
        match self {
            PrecKind::P1III | PrecKind::P2III | PrecKind::Uvs => BetaRule::MinOfBoth,
            _ => BetaRule::MaxMuLambda,
        }
    }

    /// Whether a user-chosen β is honoured (it is fixed for the others).
    pub fn accepts_beta(self) -> bool {
        matches!(self, PrecKind::P1III | PrecKind::P2III | PrecKind::Uvs)
    }
}

impl fmt::Display for PrecKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PrecKind {
    type Err = BiotError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(PrecKind::None),
            "pii" | "p_ii" => Ok(PrecKind::PII),
            "p1" | "p1iii" | "p1_iii" => Ok(PrecKind::P1III),
            "p2" | "p2iii" | "p2_iii" => Ok(PrecKind::P2III),
            "p3" | "p3iii" | "p3_iii" => Ok(PrecKind::P3III),
            "ps" => Ok(PrecKind::Ps),
            "uvs" => Ok(PrecKind::Uvs),
            _ => Err(BiotError::Config(format!("unknown preconditioner {s:?}"))),
        }
    }
}

impl TryFrom<String> for PrecKind {
    type Error = BiotError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PrecKind> for String {
    fn from(k: PrecKind) -> String {
        k.as_str().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BetaRule {
    MaxMuLambda,
    Kappa,
    MinOfBoth,
    Explicit(f64),
}

pub fn select_beta(rule: BetaRule, params: &MaterialParams) -> f64 {
    let elastic = params.mu().max(params.lambda());
    match rule {
        BetaRule::MaxMuLambda => elastic,
        BetaRule::Kappa => params.kappa(),
        BetaRule::MinOfBoth => elastic.min(params.kappa()),
        BetaRule::Explicit(b) => b,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreconditionerSpec {
    pub kind: PrecKind,
    pub beta_rule: BetaRule,
}

impl PreconditionerSpec {
    pub fn new(kind: PrecKind) -> Self {
        PreconditionerSpec { kind, beta_rule: kind.default_beta_rule() }
    }

    /// Uses an explicit β where the preconditioner accepts one.
    pub fn with_beta(kind: PrecKind, beta: Option<f64>) -> Result<Self> {
        let mut spec = Self::new(kind);
        if let Some(b) = beta {
            if !(b > 0.0 && b.is_finite()) {
                return Err(BiotError::InvalidParameter(format!("beta must be positive, got {b}")));
            }
            if kind.accepts_beta() {
                spec.beta_rule = BetaRule::Explicit(b);
            }
        }
        Ok(spec)
    }

    pub fn build(&self, op: &BlockOperator) -> Result<Preconditioner> {
        let beta = select_beta(self.beta_rule, op.params());
        match self.kind {
            PrecKind::None => Ok(Preconditioner::identity(op.dim())),
            PrecKind::PII => build_p_ii(op),
            PrecKind::P1III => build_p1_iii(op, beta),
            PrecKind::P2III => build_p2_iii(op, beta),
            PrecKind::P3III => build_p3_iii(op),
            PrecKind::Ps => Ok(build_schur_baselines(op, beta)?.0),
            PrecKind::Uvs => Ok(build_schur_baselines(op, beta)?.1),
        }
    }
}

/// Inverse of an assembled SPD block-diagonal matrix.
#[derive(Debug)]
pub struct Preconditioner {
    kind: PrecKind,
    beta: Option<f64>,
    dim: usize,
    ranges: Vec<Range<usize>>,
    blocks: Vec<CsrMatrix>,
    factors: Vec<SpdFactor>,
    notes: Vec<String>,
}

impl Preconditioner {
    pub fn identity(dim: usize) -> Self {
        Preconditioner {
            kind: PrecKind::None,
            beta: None,
            dim,
            ranges: vec![0..dim],
            blocks: vec![CsrMatrix::identity(dim)],
            factors: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn from_blocks(
        kind: PrecKind,
        beta: Option<f64>,
        blocks: Vec<(CsrMatrix, &str)>,
        notes: Vec<String>,
    ) -> Result<Self> {
        let names: Vec<String> = blocks.iter().map(|(_, n)| n.to_string()).collect();
        let blocks: Vec<CsrMatrix> = blocks.into_iter().map(|(b, _)| b).collect();
        let factors =
            par_map(blocks.len(), |i| SpdFactor::new(&blocks[i], &names[i])).into_iter().collect::<Result<Vec<_>>>()?;
        let mut ranges = Vec::with_capacity(blocks.len());
        let mut start = 0;
        for b in &blocks {
            ranges.push(start..start + b.nrows());
            start += b.nrows();
        }
        Ok(Preconditioner { kind, beta, dim: start, ranges, blocks, factors, notes })
    }

    pub fn kind(&self) -> PrecKind {
        self.kind
    }

    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    /// Remarks recorded during the build (stabilizations, warnings).
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    /// The SPD blocks whose inverses are applied.
    pub fn blocks(&self) -> &[CsrMatrix] {
        &self.blocks
    }

    /// The assembled block-diagonal matrix `Q` with `P = Q⁻¹`.
    pub fn matrix(&self) -> CsrMatrix {
        let n = self.blocks.len();
        let rows: Vec<Vec<Option<&CsrMatrix>>> =
            (0..n).map(|i| (0..n).map(|j| (i == j).then_some(&self.blocks[i])).collect()).collect();
        CsrMatrix::from_blocks(&rows).expect("diagonal blocks are square")
    }
}

impl LinearOperator for Preconditioner {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(BiotError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        y.copy_from_slice(x);
        for (range, f) in self.ranges.iter().zip(&self.factors) {
            f.solve_in_place(&mut y[range.clone()])?;
        }
        Ok(())
    }
}

fn three_field(op: &BlockOperator) -> Result<(&ThreeFieldBlocks, &[bool], &[bool])> {
    match op {
        BlockOperator::ThreeField { blocks, dofs, .. } => Ok((blocks, dofs.fixed_u(), dofs.fixed_v())),
        BlockOperator::TwoField { .. } => {
            Err(BiotError::InvalidParameter("preconditioner requires the three-field system".into()))
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(BiotError::InvalidParameter(format!("beta must be positive, got {beta}")))
    }
}

fn inverse_diagonal(m: &CsrMatrix) -> Result<Vec<f64>> {
    if !m.is_diagonal() {
        return Err(BiotError::InvalidParameter("expected a diagonal mass matrix".into()));
    }
    m.diagonal_values()
        .into_iter()
        .map(
            |d| {
                if d > 0.0 {
                    Ok(1.0 / d)
                } else {
                    Err(BiotError::InvalidParameter(format!("non-positive diagonal {d}")))
                }
            },
        )
        .collect()
}

/// `[[A_u + βB_uᵀW B_u, βB_uᵀW B_v], [βB_vᵀW B_u, A_v + βB_vᵀW B_v]]` with `W = diag(w)`.
fn augmented_uv(
    a_u: &CsrMatrix,
    a_v: &CsrMatrix,
    b_u: &CsrMatrix,
    b_v: &CsrMatrix,
    w: &[f64],
    beta: f64,
) -> Result<CsrMatrix> {
    let b = CsrMatrix::from_blocks(&[vec![Some(b_u), Some(b_v)]])?;
    let a = CsrMatrix::from_blocks(&[vec![Some(a_u), None], vec![None, Some(a_v)]])?;
    a.linear_combination(1.0, &b.gram_diag(w)?, beta)
}

/// Coupled displacement–flux block of `P1^III`.
pub fn augmented_block(op: &BlockOperator, beta: f64) -> Result<CsrMatrix> {
    let (b, _, _) = three_field(op)?;
    augmented_uv(&b.a_u, &b.a_v, &b.b_u, &b.b_v, &inverse_diagonal(&b.m_p)?, beta)
}

/// `blockdiag(A_u, β⁻¹M_p + A_p)` for the two-field system, `β = max{μ, λ}`.
pub fn build_p_ii(op: &BlockOperator) -> Result<Preconditioner> {
    let BlockOperator::TwoField { blocks, dofs, params } = op else {
        return Err(BiotError::InvalidParameter("P^II requires the two-field system".into()));
    };
    let beta = select_beta(BetaRule::MaxMuLambda, params);
    let p = blocks.m_p.linear_combination(1.0 / beta, &blocks.a_p, 1.0)?.eliminate_symmetric(dofs.fixed_p(), 1.0);
    Preconditioner::from_blocks(
        PrecKind::PII,
        Some(beta),
        vec![(blocks.a_u.clone(), "A_u"), (p, "pressure")],
        Vec::new(),
    )
}

/// Coupled augmented `(u, v)` block plus `β⁻¹M_p + C_p`.
pub fn build_p1_iii(op: &BlockOperator, beta: f64) -> Result<Preconditioner> {
    check_beta(beta)?;
    let (b, _, _) = three_field(op)?;
    let uv = augmented_block(op, beta)?;
    let p = b.m_p.linear_combination(1.0 / beta, &b.c_p, 1.0)?;
    Preconditioner::from_blocks(
        PrecKind::P1III,
        Some(beta),
        vec![(uv, "augmented (u, v)"), (p, "pressure")],
        Vec::new(),
    )
}

/// `blockdiag(A_u, A_v + βB_vᵀM_p⁻¹B_v, β⁻¹M_p + C_p)`.
pub fn build_p2_iii(op: &BlockOperator, beta: f64) -> Result<Preconditioner> {
    check_beta(beta)?;
    let (b, _, _) = three_field(op)?;
    let w = inverse_diagonal(&b.m_p)?;
    let v = b.a_v.linear_combination(1.0, &b.b_v.gram_diag(&w)?, beta)?;
    let p = b.m_p.linear_combination(1.0 / beta, &b.c_p, 1.0)?;
    let mut notes = Vec::new();
    let xi_beta = op.params().xi() * beta;
    if xi_beta > XI_BETA_WARN {
        notes.push(format!("xi*beta = {xi_beta:.3e} exceeds {XI_BETA_WARN}"));
    }
    Preconditioner::from_blocks(
        PrecKind::P2III,
        Some(beta),
        vec![(b.a_u.clone(), "A_u"), (v, "augmented A_v"), (p, "pressure")],
        notes,
    )
}

/// Pressure block of `P3^III`: `β⁻¹M_p + κ⁻¹B_v lump(M_v)⁻¹B_vᵀ + C_p`.
pub fn p3_pressure_block(op: &BlockOperator, beta: f64) -> Result<CsrMatrix> {
    let (b, _, _) = three_field(op)?;
    let lumped = b.m_v.row_sums();
    let w: Vec<f64> = lumped
        .iter()
        .map(|&d| if d > 0.0 { Ok(1.0 / d) } else { Err(BiotError::InvalidParameter(format!("lumped flux mass {d}"))) })
        .collect::<Result<_>>()?;
    let lap = b.b_v.transpose().gram_diag(&w)?;
    b.m_p.linear_combination(1.0 / beta, &lap, 1.0 / op.params().kappa())?.linear_combination(1.0, &b.c_p, 1.0)
}

/// `blockdiag(A_u, A_v, β⁻¹M_p + κ⁻¹B_v lump(M_v)⁻¹B_vᵀ + C_p)`, `β = max{μ, λ}`.
pub fn build_p3_iii(op: &BlockOperator) -> Result<Preconditioner> {
    let (b, _, _) = three_field(op)?;
    let beta = select_beta(BetaRule::MaxMuLambda, op.params());
    let p = p3_pressure_block(op, beta)?;
    Preconditioner::from_blocks(
        PrecKind::P3III,
        Some(beta),
        vec![(b.a_u.clone(), "A_u"), (b.a_v.clone(), "A_v"), (p, "pressure")],
        Vec::new(),
    )
}

/// Schur-complement baselines `(P_ps, P_uvs)`.
///
/// `P_ps = blockdiag(A_u, A_v, C + B_v D_v⁻¹B_vᵀ)` with `D_v = diag(A_v)`;
/// `P_uvs` has the coupled block `[[A_u + B_uᵀC⁻¹B_u, B_uᵀC⁻¹B_v], [·, A_v + B_vᵀC⁻¹B_v]]`
/// and pressure block `C`. `C = C_p`, shifted by `β⁻¹M_p` where singular.
pub fn build_schur_baselines(op: &BlockOperator, beta: f64) -> Result<(Preconditioner, Preconditioner)> {
    check_beta(beta)?;
    let (b, _, _) = three_field(op)?;
    let shifted = || b.c_p.linear_combination(1.0, &b.m_p, 1.0 / beta);
    let shift_note = format!("C_p singular; stabilized with beta^-1 M_p (beta = {beta:.4e})");

    let d_v = b.a_v.diagonal_values();
    if let Some(d) = d_v.iter().find(|d| !(**d > 0.0)) {
        return Err(BiotError::InvalidParameter(format!("diag(A_v) entry {d} is not positive")));
    }
    let w: Vec<f64> = d_v.iter().map(|d| 1.0 / d).collect();
    let schur = b.b_v.transpose().gram_diag(&w)?;
    let ps_pressure = b.c_p.linear_combination(1.0, &schur, 1.0)?;
    let blocks = |p: CsrMatrix| vec![(b.a_u.clone(), "A_u"), (b.a_v.clone(), "A_v"), (p, "pressure Schur")];
    let ps = match Preconditioner::from_blocks(PrecKind::Ps, None, blocks(ps_pressure), Vec::new()) {
        Ok(p) => p,
        Err(BiotError::Factorization { .. }) => {
            let p = shifted()?.linear_combination(1.0, &schur, 1.0)?;
            Preconditioner::from_blocks(PrecKind::Ps, Some(beta), blocks(p), vec![shift_note.clone()])?
        }
        Err(e) => return Err(e),
    };

    let c_diag = if b.c_p.is_diagonal() { Some(b.c_p.diagonal_values()) } else { None };
    let (c, notes) = match c_diag {
        Some(d) if d.iter().all(|x| *x > 0.0) => (b.c_p.clone(), Vec::new()),
        _ => (shifted()?, vec![shift_note]),
    };
    let w = inverse_diagonal(&c)?;
    let uv = augmented_uv(&b.a_u, &b.a_v, &b.b_u, &b.b_v, &w, 1.0)?;
    let uvs = Preconditioner::from_blocks(PrecKind::Uvs, Some(beta), vec![(uv, "coupled (u, v)"), (c, "C")], notes)?;
    Ok((ps, uvs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_three_field, assemble_two_field};
    use crate::linalg::dot;
    use crate::mesh::build_structured_mesh;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn footing(e: f64, nu: f64, kappa: f64) -> MaterialParams {
        MaterialParams::footing(e, nu, kappa).unwrap()
    }

    fn assert_spd(p: &Preconditioner) {
        let mut rng = StdRng::seed_from_u64(7);
        let mut y = vec![0.0; p.dim()];
        for _ in 0..100 {
            let z: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            p.apply(&z, &mut y).unwrap();
            assert!(dot(&y, &z) > 0.0);
        }
    }

    #[test]
    fn beta_rules() {
        let p = footing(3e4, 0.4, 1e7);
        let lam = 0.4 * 3e4 / (1.4 * 0.2);
        assert!((select_beta(BetaRule::MaxMuLambda, &p) - lam).abs() < 1e-9);
        assert!((select_beta(BetaRule::MinOfBoth, &p) - lam).abs() < 1e-9);
        assert_eq!(select_beta(BetaRule::Kappa, &p), 1e7);
        assert_eq!(select_beta(BetaRule::MinOfBoth, &footing(3e6, 0.499, 1.0)), 1.0);
        assert_eq!(select_beta(BetaRule::Explicit(2.5), &p), 2.5);
        // ν = 1/4 gives μ = λ
        let tie = footing(2.5, 0.25, 1.0);
        assert!((tie.mu() - tie.lambda()).abs() < 1e-15);
        assert_eq!(select_beta(BetaRule::MaxMuLambda, &tie), tie.lambda().max(tie.mu()));
    }

    #[test]
    fn kind_strings_roundtrip() {
        for k in PrecKind::ALL {
            assert_eq!(k.as_str().parse::<PrecKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(serde_json::from_str::<PrecKind>(&json).unwrap(), k);
        }
        assert!("p4".parse::<PrecKind>().is_err());
        assert_eq!(PreconditionerSpec::new(PrecKind::P2III).beta_rule, BetaRule::MinOfBoth);
        assert_eq!(PreconditionerSpec::with_beta(PrecKind::P3III, Some(3.0)).unwrap().beta_rule, BetaRule::MaxMuLambda);
        assert!(PreconditionerSpec::with_beta(PrecKind::P1III, Some(-1.0)).is_err());
    }

    #[test]
    fn all_three_field_preconditioners_are_spd() {
        let mesh = build_structured_mesh(4).unwrap();
        let (op, _, _) = assemble_three_field(&mesh, &footing(3e6, 0.499, 1.0)).unwrap();
        for kind in [PrecKind::None, PrecKind::P1III, PrecKind::P2III, PrecKind::P3III, PrecKind::Ps, PrecKind::Uvs] {
            let p = PreconditionerSpec::new(kind).build(&op).unwrap();
            assert_eq!(p.dim(), op.dim());
            assert_spd(&p);
        }
    }

    #[test]
    fn p_ii_is_block_diagonal_and_spd() {
        let mesh = build_structured_mesh(4).unwrap();
        let (op, _, dofs) = assemble_two_field(&mesh, &footing(3e4, 0.4, 10.0)).unwrap();
        let p = build_p_ii(&op).unwrap();
        assert_spd(&p);
        let mut x = vec![0.0; op.dim()];
        for v in x.iter_mut().take(dofs.num_u()) {
            *v = 1.0;
        }
        let mut y = vec![0.0; op.dim()];
        p.apply(&x, &mut y).unwrap();
        assert!(y[dofs.num_u()..].iter().all(|v| *v == 0.0));
        assert!(build_p1_iii(&op, 1.0).is_err());
    }

    #[test]
    fn p2_preserves_block_supports() {
        let mesh = build_structured_mesh(4).unwrap();
        let (op, _, dofs) = assemble_three_field(&mesh, &footing(3e4, 0.4, 1e3)).unwrap();
        let p = build_p2_iii(&op, 10.0).unwrap();
        let mut x = vec![0.0; op.dim()];
        x[..dofs.num_u()].iter_mut().enumerate().for_each(|(i, v)| *v = (i as f64).sin());
        let mut y = vec![0.0; op.dim()];
        p.apply(&x, &mut y).unwrap();
        assert!(y[dofs.num_u()..].iter().all(|v| *v == 0.0));
        assert!(y[..dofs.num_u()].iter().any(|v| *v != 0.0));
    }

    #[test]
    fn p1_reduces_without_augmentation() {
        let mesh = build_structured_mesh(2).unwrap();
        let (op, _, _) = assemble_three_field(&mesh, &footing(3e4, 0.3, 5.0)).unwrap();
        let BlockOperator::ThreeField { blocks, .. } = &op else { panic!() };
        let plain = CsrMatrix::from_blocks(&[vec![Some(&blocks.a_u), None], vec![None, Some(&blocks.a_v)]]).unwrap();
        let aug = augmented_block(&op, 0.0).unwrap();
        assert_eq!(aug.linear_combination(1.0, &plain, -1.0).unwrap().max_abs(), 0.0);
        let p = build_p1_iii(&op, 7.0).unwrap();
        let pressure = &p.blocks()[1];
        let expect = blocks.m_p.scaled(1.0 / 7.0);
        assert_eq!(pressure.linear_combination(1.0, &expect, -1.0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn p3_pressure_block_structure() {
        let mesh = build_structured_mesh(2).unwrap();
        let (op, _, dofs) = assemble_three_field(&mesh, &footing(3e4, 0.3, 2.0)).unwrap();
        let BlockOperator::ThreeField { blocks, .. } = &op else { panic!() };
        let beta = 4.0;
        let full = p3_pressure_block(&op, beta).unwrap();
        let lap = full.linear_combination(1.0, &blocks.m_p, -1.0 / beta).unwrap();
        for (cell, s) in lap.row_sums().iter().enumerate() {
            let touches_fixed = mesh.cell_edges()[cell].iter().any(|(e, _)| dofs.fixed_v()[*e]);
            if !touches_fixed {
                assert!(*s >= -1e-12, "cell {cell}: {s}");
            }
        }
        let doubled = p3_pressure_block(&op, 2.0 * beta).unwrap();
        let diff = full.linear_combination(1.0, &doubled, -1.0).unwrap();
        let expect = blocks.m_p.scaled(0.5 / beta);
        assert!(diff.linear_combination(1.0, &expect, -1.0).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn schur_baselines() {
        let mesh = build_structured_mesh(4).unwrap();
        let params = footing(3e4, 0.4, 1e3);
        let (op, _, _) = assemble_three_field(&mesh, &params).unwrap();
        let BlockOperator::ThreeField { blocks, .. } = &op else { panic!() };
        assert!(blocks.a_v.diagonal_values().iter().all(|d| *d > 0.0));
        let beta = select_beta(BetaRule::MinOfBoth, &params);
        let (ps, uvs) = build_schur_baselines(&op, beta).unwrap();
        assert!(ps.notes().is_empty());
        assert_eq!(uvs.notes().len(), 1);
        let p1 = build_p1_iii(&op, beta).unwrap();
        let diff = uvs.blocks()[0].linear_combination(1.0, &p1.blocks()[0], -1.0).unwrap();
        assert!(diff.max_abs() <= 1e-12 * p1.blocks()[0].max_abs());
        assert_spd(&ps);
        assert_spd(&uvs);

        let stored = params.with_storage(0.5).unwrap();
        let (op, _, _) = assemble_three_field(&mesh, &stored).unwrap();
        let (_, uvs) = build_schur_baselines(&op, beta).unwrap();
        assert!(uvs.notes().is_empty());
    }

    #[test]
    fn large_xi_beta_is_noted() {
        let mesh = build_structured_mesh(2).unwrap();
        let params = footing(3e4, 0.4, 1e7).with_storage(1.0).unwrap();
        let (op, _, _) = assemble_three_field(&mesh, &params).unwrap();
        let p = PreconditionerSpec::new(PrecKind::P2III).build(&op).unwrap();
        assert_eq!(p.notes().len(), 1);
    }
}
