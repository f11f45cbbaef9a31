//! Finite-element laboratory for block preconditioning of the discretized
//! Biot poroelasticity equations.
//!
//! The crate assembles the two-field (Taylor–Hood `P2 × P1`) and the rescaled,
//! symmetric three-field (`P2 × RT0 × P0`) saddle-point systems of the 2D
//! poroelastic footing problem, builds the norm-equivalent block-diagonal
//! preconditioners for them, and measures their robustness through
//! preconditioned MINRES iteration counts and spectral condition numbers.
//!
//! Module map:
//!
//! * [`mesh`] – structured triangulation of `(-4, 4)²` with tagged boundary.
//! * [`elements`] – quadrature, Lagrange and Raviart–Thomas bases.
//! * [`assembly`] – material parameters, DOF maps and block operators.
//! * [`linalg`] – CSR kernels, sparse SPD factorization, MINRES, eigenvalue bounds.
//! * [`preconditioners`] – `P^II`, `P1^III`, `P2^III`, `P3^III` and Schur baselines.
//! * [`analysis`] – discrete inf-sup constants, condition numbers, material data.
//! * [`sweep`] – parameter sweeps and table emission used by the `biot-prec` CLI.

pub mod analysis;
pub mod assembly;
pub mod elements;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod preconditioners;
pub mod sweep;

pub use assembly::{BlockOperator, DofMap, Formulation, MaterialParams};
pub use error::{BiotError, Result};
pub use linalg::{CsrMatrix, LinearOperator, SolveReport, SpdFactor};
pub use mesh::{BoundaryTag, Mesh};
pub use preconditioners::{BetaRule, PrecKind, Preconditioner, PreconditionerSpec};
