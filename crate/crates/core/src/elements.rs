//! Reference-element machinery on affine triangles: quadrature rules and the
//! bases used by the discretizations (vector `P2`, scalar `P1`/`P0`, and the
//! lowest-order Raviart–Thomas space).
//!
//! Local numbering conventions, shared with [`crate::mesh`]:
//! local edge `i` is opposite local vertex `i`; `P2` nodes are the three
//! vertices followed by the midpoints of edges 0, 1, 2; vector `P2` DOFs are
//! interleaved as `2 * node + component`.

use serde::{Deserialize, Serialize};

use crate::error::{BiotError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    VectorP2,
    ScalarP1,
    ScalarP0,
    RtLowest,
}

impl ElementKind {
    /// DOFs per triangle.
    pub fn local_dofs(self) -> usize {
        match self {
            ElementKind::VectorP2 => 12,
            ElementKind::ScalarP1 => 3,
            ElementKind::ScalarP0 => 1,
            ElementKind::RtLowest => 3,
        }
    }
}

/// Quadrature on the reference triangle, stored in barycentric coordinates.
/// Weights sum to the reference area 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn orbit_s3(a: f64, w: f64, pts: &mut Vec<[f64; 3]>, wts: &mut Vec<f64>) {
    let b = 1.0 - 2.0 * a;
    for p in [[a, a, b], [a, b, a], [b, a, a]] {
        pts.push(p);
        wts.push(w);
    }
}

fn orbit_s6(a: f64, b: f64, w: f64, pts: &mut Vec<[f64; 3]>, wts: &mut Vec<f64>) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        pts.push(p);
        wts.push(w);
    }
}

/// Symmetric rule exact for all polynomials of total degree `<= degree`.
///
/// Degrees 1–6 are supported (centroid, Strang–Fix 3-point, Dunavant 6-,
/// 7- and 12-point rules); degree 3 is served by the degree-4 rule.
pub fn quadrature_rule(degree: usize) -> Result<QuadratureRule> {
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    // weights below are normalized to unit area, scaled by 1/2 at the end
    let effective = match degree {
        1 => {
            pts.push([1.0 / 3.0; 3]);
            wts.push(1.0);
            1
        }
        2 => {
            orbit_s3(1.0 / 6.0, 1.0 / 3.0, &mut pts, &mut wts);
            2
        }
        3 | 4 => {
            orbit_s3(
                0.445_948_490_915_964_886_318_329_253_883,
                0.223_381_589_678_011_465_944_625_396_786,
                &mut pts,
                &mut wts,
            );
            orbit_s3(
                0.091_576_213_509_770_743_459_571_463_402,
                0.109_951_743_655_321_867_388_707_936_547,
                &mut pts,
                &mut wts,
            );
            4
        }
        5 => {
            let s15 = 15f64.sqrt();
            pts.push([1.0 / 3.0; 3]);
            wts.push(9.0 / 40.0);
            orbit_s3((6.0 - s15) / 21.0, (155.0 - s15) / 1200.0, &mut pts, &mut wts);
            orbit_s3((6.0 + s15) / 21.0, (155.0 + s15) / 1200.0, &mut pts, &mut wts);
            5
        }
        6 => {
            orbit_s3(
                0.249_286_745_170_910_421_291_638_553_107,
                0.116_786_275_726_379_366_030_690_538_594,
                &mut pts,
                &mut wts,
            );
            orbit_s3(
                0.063_089_014_491_502_228_340_331_602_870,
                0.050_844_906_370_206_816_920_936_809_106,
                &mut pts,
                &mut wts,
            );
            orbit_s6(
                0.310_352_451_033_784_405_416_607_733_956,
                0.053_145_049_844_816_947_353_249_671_631,
                0.082_851_075_618_373_575_193_553_456_421,
                &mut pts,
                &mut wts,
            );
            6
        }
        _ => return Err(BiotError::UnsupportedQuadrature(degree)),
    };
    for w in wts.iter_mut() {
        *w *= 0.5;
    }
    Ok(QuadratureRule { degree: effective, points: pts, weights: wts })
}

/// Affine geometry of one triangle plus its Raviart–Thomas edge signs.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGeometry {
    pub coords: [[f64; 2]; 3],
    /// Positive (counter-clockwise) area.
    pub area: f64,
    /// Constant gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
    pub edge_lengths: [f64; 3],
    pub rt_signs: [f64; 3],
}

impl CellGeometry {
    pub fn new(coords: [[f64; 2]; 3], rt_signs: [i8; 3]) -> Result<Self> {
        let [p0, p1, p2] = coords;
        let area = 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]));
        let scale = (p1[0] - p0[0]).abs() + (p1[1] - p0[1]).abs() + (p2[0] - p0[0]).abs() + (p2[1] - p0[1]).abs();
        if !(area > 1e-14 * scale * scale) {
            return Err(BiotError::DegenerateCell { cell: usize::MAX, area });
        }
        let mut grad_lambda = [[0.0; 2]; 3];
        let mut edge_lengths = [0.0; 3];
        for i in 0..3 {
            let a = coords[(i + 1) % 3];
            let b = coords[(i + 2) % 3];
            grad_lambda[i] = [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
            edge_lengths[i] = (b[0] - a[0]).hypot(b[1] - a[1]);
        }
        Ok(CellGeometry { coords, area, grad_lambda, edge_lengths, rt_signs: rt_signs.map(f64::from) })
    }

    pub fn map(&self, bary: &[f64; 3]) -> [f64; 2] {
        let mut x = [0.0; 2];
        for (l, p) in bary.iter().zip(self.coords.iter()) {
            x[0] += l * p[0];
            x[1] += l * p[1];
        }
        x
    }
}

pub fn p1_values(bary: &[f64; 3]) -> [f64; 3] {
    *bary
}

pub fn p2_values(bary: &[f64; 3]) -> [f64; 6] {
    let [l0, l1, l2] = *bary;
    [l0 * (2.0 * l0 - 1.0), l1 * (2.0 * l1 - 1.0), l2 * (2.0 * l2 - 1.0), 4.0 * l1 * l2, 4.0 * l2 * l0, 4.0 * l0 * l1]
}

pub fn p2_gradients(bary: &[f64; 3], geom: &CellGeometry) -> [[f64; 2]; 6] {
    let g = &geom.grad_lambda;
    let mut out = [[0.0; 2]; 6];
    for i in 0..3 {
        let s = 4.0 * bary[i] - 1.0;
        out[i] = [s * g[i][0], s * g[i][1]];
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        out[3 + i] = [4.0 * (bary[k] * g[j][0] + bary[j] * g[k][0]), 4.0 * (bary[k] * g[j][1] + bary[j] * g[k][1])];
    }
    out
}

/// Lowest-order Raviart–Thomas basis at physical point `x`.
///
/// `φ_i = s_i |e_i| / (2|T|) (x − p_i)`: the normal component of `φ_i` is
/// `s_i` on edge `i` and zero on the other two edges, so the flux through
/// edge `i` is `s_i |e_i|`.
pub fn rt_values(x: &[f64; 2], geom: &CellGeometry) -> [[f64; 2]; 3] {
    let mut out = [[0.0; 2]; 3];
    for i in 0..3 {
        let c = geom.rt_signs[i] * geom.edge_lengths[i] / (2.0 * geom.area);
        out[i] = [c * (x[0] - geom.coords[i][0]), c * (x[1] - geom.coords[i][1])];
    }
    out
}

pub fn rt_divergence(geom: &CellGeometry) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (i, d) in out.iter_mut().enumerate() {
        *d = geom.rt_signs[i] * geom.edge_lengths[i] / geom.area;
    }
    out
}

/// Basis functions of one element evaluated at one point.
///
/// Scalar bases store their value in `values[i][0]` and their gradient in
/// `gradients[i][0]`. Vector bases store the full Jacobian (`gradients[i][c]`
/// is the gradient of component `c`), the symmetric gradient and the
/// divergence.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEval {
    pub values: Vec<[f64; 2]>,
    pub gradients: Vec<[[f64; 2]; 2]>,
    pub sym_gradients: Vec<[[f64; 2]; 2]>,
    pub divergence: Vec<f64>,
}

pub fn eval_basis(kind: ElementKind, bary: &[f64; 3], geom: &CellGeometry) -> BasisEval {
    match kind {
        ElementKind::ScalarP0 => BasisEval {
            values: vec![[1.0, 0.0]],
            gradients: vec![[[0.0; 2]; 2]],
            sym_gradients: Vec::new(),
            divergence: Vec::new(),
        },
        ElementKind::ScalarP1 => BasisEval {
            values: p1_values(bary).iter().map(|v| [*v, 0.0]).collect(),
            gradients: geom.grad_lambda.iter().map(|g| [*g, [0.0; 2]]).collect(),
            sym_gradients: Vec::new(),
            divergence: Vec::new(),
        },
        ElementKind::VectorP2 => {
            let vals = p2_values(bary);
            let grads = p2_gradients(bary, geom);
            let mut e = BasisEval {
                values: Vec::with_capacity(12),
                gradients: Vec::with_capacity(12),
                sym_gradients: Vec::with_capacity(12),
                divergence: Vec::with_capacity(12),
            };
            for node in 0..6 {
                for comp in 0..2 {
                    let mut v = [0.0; 2];
                    v[comp] = vals[node];
                    let mut jac = [[0.0; 2]; 2];
                    jac[comp] = grads[node];
                    let sym = [[jac[0][0], 0.5 * (jac[0][1] + jac[1][0])], [0.5 * (jac[0][1] + jac[1][0]), jac[1][1]]];
                    e.values.push(v);
                    e.gradients.push(jac);
                    e.sym_gradients.push(sym);
                    e.divergence.push(grads[node][comp]);
                }
            }
            e
        }
        ElementKind::RtLowest => {
            let x = geom.map(bary);
            BasisEval {
                values: rt_values(&x, geom).to_vec(),
                gradients: Vec::new(),
                sym_gradients: Vec::new(),
                divergence: rt_divergence(geom).to_vec(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// ∫_T x^a y^b over the unit reference triangle = a! b! / (a + b + 2)!.
    fn monomial_exact(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    fn integrate(rule: &QuadratureRule, a: i32, b: i32) -> f64 {
        rule.points.iter().zip(&rule.weights).map(|(p, w)| w * p[1].powi(a) * p[2].powi(b)).sum()
    }

    #[test]
    fn rules_integrate_monomials_exactly() {
        for degree in 1..=6 {
            let rule = quadrature_rule(degree).unwrap();
            assert!(rule.weights.iter().all(|w| *w > 0.0));
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 0.5).abs() < 1e-15);
            for p in &rule.points {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let err = (integrate(&rule, a as i32, b as i32) - monomial_exact(a, b)).abs();
                    assert!(err < 1e-14, "degree {degree}: x^{a} y^{b} error {err:e}");
                }
            }
        }
    }

    #[test]
    fn named_quadrature_examples() {
        let r1 = quadrature_rule(1).unwrap();
        assert_eq!(r1.len(), 1);
        assert_eq!(r1.weights[0], 0.5);
        let r2 = quadrature_rule(2).unwrap();
        assert!((integrate(&r2, 1, 1) - 1.0 / 24.0).abs() < 1e-15);
        let r4 = quadrature_rule(4).unwrap();
        assert!((integrate(&r4, 2, 2) - 1.0 / 180.0).abs() < 1e-15);
        assert_eq!(quadrature_rule(0), Err(BiotError::UnsupportedQuadrature(0)));
        assert_eq!(quadrature_rule(7), Err(BiotError::UnsupportedQuadrature(7)));
    }

    fn sample_geometry() -> CellGeometry {
        CellGeometry::new([[0.3, -0.2], [1.7, 0.1], [0.5, 1.4]], [1, -1, 1]).unwrap()
    }

    #[test]
    fn degenerate_cell_rejected() {
        let r = CellGeometry::new([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]], [1, 1, 1]);
        assert!(matches!(r, Err(BiotError::DegenerateCell { .. })));
        let r = CellGeometry::new([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], [1, 1, 1]);
        assert!(r.is_err(), "clockwise orientation has negative area");
    }

    #[test]
    fn lagrange_kronecker_property() {
        let geom = sample_geometry();
        let vertices = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for (i, b) in vertices.iter().enumerate() {
            let e = eval_basis(ElementKind::ScalarP1, b, &geom);
            for j in 0..3 {
                assert_eq!(e.values[j][0], if i == j { 1.0 } else { 0.0 });
            }
        }
        let mut nodes = vertices.to_vec();
        nodes.extend([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]]);
        for (m, b) in nodes.iter().enumerate() {
            let e = eval_basis(ElementKind::VectorP2, b, &geom);
            for node in 0..6 {
                for comp in 0..2 {
                    let v = e.values[2 * node + comp];
                    let expect = if node == m { 1.0 } else { 0.0 };
                    assert!((v[comp] - expect).abs() < 1e-15);
                    assert_eq!(v[1 - comp], 0.0);
                }
            }
        }
        // midpoint of edge 0, x-component basis → (1, 0) there
        let e = eval_basis(ElementKind::VectorP2, &[0.0, 0.5, 0.5], &geom);
        assert_eq!(e.values[2 * 3], [1.0, 0.0]);
    }

    #[test]
    fn partition_of_unity_at_quadrature_points() {
        let geom = sample_geometry();
        let rule = quadrature_rule(6).unwrap();
        for b in &rule.points {
            let s1: f64 = p1_values(b).iter().sum();
            let s2: f64 = p2_values(b).iter().sum();
            assert!((s1 - 1.0).abs() < 1e-14 && (s2 - 1.0).abs() < 1e-14);
            let g: [f64; 2] = p2_gradients(b, &geom).iter().fold([0.0; 2], |a, g| [a[0] + g[0], a[1] + g[1]]);
            assert!(g[0].abs() < 1e-13 && g[1].abs() < 1e-13);
        }
    }

    #[test]
    fn p2_gradients_match_finite_differences() {
        let geom = sample_geometry();
        let b = [0.2, 0.3, 0.5];
        let x = geom.map(&b);
        // physical point -> barycentric via the affine inverse
        let to_bary = |p: [f64; 2]| {
            let mut l = [0.0; 3];
            for i in 0..3 {
                let g = geom.grad_lambda[i];
                let v = geom.coords[i];
                l[i] = 1.0 + g[0] * (p[0] - v[0]) + g[1] * (p[1] - v[1]);
            }
            l
        };
        let grads = p2_gradients(&b, &geom);
        let h = 1e-6;
        for d in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[d] += h;
            xm[d] -= h;
            let vp = p2_values(&to_bary(xp));
            let vm = p2_values(&to_bary(xm));
            for i in 0..6 {
                let fd = (vp[i] - vm[i]) / (2.0 * h);
                assert!((fd - grads[i][d]).abs() < 1e-7, "basis {i} dir {d}");
            }
        }
    }

    /// Mean normal component of φ_i over edge j, by 3-point Gauss–Legendre.
    fn edge_normal_mean(geom: &CellGeometry, i: usize, j: usize) -> f64 {
        let a = geom.coords[(j + 1) % 3];
        let b = geom.coords[(j + 2) % 3];
        let len = geom.edge_lengths[j];
        let n = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len];
        let gl =
            [(0.5 - 0.5 * (0.6f64).sqrt(), 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + 0.5 * (0.6f64).sqrt(), 5.0 / 18.0)];
        gl.iter()
            .map(|(t, w)| {
                let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                let phi = rt_values(&x, geom)[i];
                w * (phi[0] * n[0] + phi[1] * n[1])
            })
            .sum()
    }

    #[test]
    fn rt_normal_trace_duality() {
        let geom = sample_geometry();
        for i in 0..3 {
            for j in 0..3 {
                let mean = edge_normal_mean(&geom, i, j);
                let expect = if i == j { geom.rt_signs[i] } else { 0.0 };
                assert!((mean - expect).abs() < 1e-12, "φ_{i} on edge {j}: {mean}");
            }
        }
    }

    #[test]
    fn rt_divergence_is_edge_length_over_area() {
        let geom = sample_geometry();
        let div = rt_divergence(&geom);
        let rule = quadrature_rule(2).unwrap();
        for i in 0..3 {
            assert!((div[i].abs() - geom.edge_lengths[i] / geom.area).abs() < 1e-13);
            // ∫_T div φ_i = flux through ∂T = s_i |e_i|
            let integral: f64 = rule.weights.iter().map(|w| w * 2.0 * geom.area * div[i]).sum();
            let flux: f64 = (0..3).map(|j| edge_normal_mean(&geom, i, j) * geom.edge_lengths[j]).sum();
            assert!((integral - flux).abs() < 1e-12);
        }
    }
}
