//! Numerical and exact-algebraic toolkit for the twistor space of an
//! oriented Riemannian 4-manifold.
//!
//! The crate tests immersed surfaces for superminimality, constructs the
//! circle-bundle lift of a surface inside the twistor space, measures how
//! far the lift is from being Lagrangian for the one-parameter family of
//! almost Hermitian structures `(g_lambda, J_+)` / `(g_lambda, J_-)`, checks
//! minimality of the lift, and verifies the supporting `so(5)` identities
//! exactly. Everything runs on coordinate charts of three model geometries:
//! flat `R^4`, the round 4-sphere, and the Fubini–Study complex projective
//! plane.
//!
//! Grid sweeps are data parallel: with the default `parallel` feature they
//! run on a rayon pool (`RAYON_NUM_THREADS` controls the width); without it
//! the same entry points run sequentially. Reductions are performed in
//! sample-index order either way, so reports are deterministic.

// Tensor kernels favor explicit index loops over iterator chains, and
// validation uses `!(x > 0.0)` so that NaN fails closed; keep the style
// lints those patterns trip out of the way.
#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::type_complexity
)]

pub mod exec;
pub mod expr;
pub mod geom;
pub mod jet;
pub mod liealg;
pub mod lift;
pub mod surface;
pub mod twistor;

pub mod corpus;

pub use expr::Expr;
pub use geom::{ChartPoint, GeomError, ManifoldModel};
pub use jet::{Jet, Jet2, Jet3, Jet4, Smooth};
pub use lift::{DefectReport, LagrangianPatch, LiftError};
pub use surface::{ImmersedSurface, SurfaceError};
pub use twistor::{HermitianPack, HermitianSign, TwistorError, TwistorPoint, TwistorTangent};
