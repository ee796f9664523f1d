//! Potential mean-field games on triangulated surfaces.
//!
//! Densities are piecewise-linear on a triangle mesh and sampled at `n`
//! uniform time steps; fluxes are piecewise-constant tangent fields on the
//! staggered steps. The crate provides the mesh calculus ([`mesh`]), the
//! space-time fields ([`field`]), the discrete objective and its gradient
//! ([`cost`]), and a proximal gradient solver with an exact projection onto
//! the discrete continuity equation ([`solver`]).
//!
//! Everything is generic over the scalar type; the aliases below fix `f64`.

// `!(x > 0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cost;
pub mod error;
pub mod field;
pub mod linalg;
pub mod mesh;
pub mod scalar;
pub mod solver;

pub use cost::{objective, objective_gradient, CostBreakdown, CostSpec, Interaction, Terminal};
pub use error::{DomainError, MeshError, SolveError, SpecError};
pub use field::{Averaging, DensityField, DualField, FluxField, VertexSeries};
pub use mesh::{DistanceMetric, Kernel, Mesh};
pub use scalar::Scalar;
pub use solver::{
    gradient_step, kkt_residual, pgd_solve, pgd_solve_with, KktResidual, ProjectionOperator, SolveReport,
    Solution, SolverOptions,
};

pub type TriMesh = Mesh<f64>;
pub type TriMeshF32 = Mesh<f32>;
pub type Density = DensityField<f64>;
pub type Flux = FluxField<f64>;
pub type Dual = DualField<f64>;
pub type InteractionKernel = Kernel<f64>;
pub type Costs = CostSpec<f64>;
pub type Projection = ProjectionOperator<f64>;
pub type Options = SolverOptions<f64>;
