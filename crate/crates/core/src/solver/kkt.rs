use serde::Serialize;

use super::ProjectionOperator;
use crate::cost::{objective_gradient, CostSpec};
use crate::error::DomainError;
use crate::field::{
    continuity_residual, space_divergence, space_gradient, time_diff_adjoint, time_diff_homogeneous,
    triangle_time_norm, vertex_time_norm, DensityField, FluxField, VertexSeries,
};
use crate::mesh::Mesh;
use crate::scalar::Scalar;

/// Norms of the three KKT defects of the discrete problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktResidual<T> {
    /// `‖min(g_P − D_t*Ψ, P)‖_{V,t}`: density stationarity with the sign complementarity.
    pub density: T,
    /// `‖g_M + ∇Ψ‖_{T,t}`: flux stationarity.
    pub flux: T,
    /// `‖D_t P + ∇·M‖_{V,t}`: feasibility.
    pub continuity: T,
}

impl<T: Scalar> KktResidual<T> {
    pub fn max(&self) -> T {
        self.density.max(self.flux).max(self.continuity)
    }

    pub fn min(&self) -> T {
        self.density.min(self.flux).min(self.continuity)
    }
}

/// Gradient of the objective in the `⟨·,·⟩_{V,t}` / `⟨·,·⟩_{T,t}` geometry:
/// `n A_V⁻¹ ∂_P Y` and `n A_T⁻¹ ∂_M Y`.
pub fn weighted_gradient<T: Scalar>(
    mesh: &Mesh<T>,
    spec: &CostSpec<T>,
    p: &DensityField<T>,
    m: &FluxField<T>,
) -> Result<(VertexSeries<T>, FluxField<T>), DomainError> {
    let (mut gp, mut gm) = objective_gradient(mesh, spec, p, m)?;
    let n = T::from_count(p.num_steps());
    let h = mesh.num_vertices();
    let s = mesh.num_triangles();
    for (idx, v) in gp.as_mut_slice().iter_mut().enumerate() {
        *v = *v * n / mesh.vertex_areas()[idx % h];
    }
    for (idx, v) in gm.as_mut_slice().iter_mut().enumerate() {
        let c = n / mesh.triangle_areas()[idx % s];
        *v = [v[0] * c, v[1] * c, v[2] * c];
    }
    Ok((gp, gm))
}

/// KKT residue of `(P, M)`: solve for the multiplier Ψ that best explains the
/// gradient, then measure what is left over.
pub fn kkt_residual<T: Scalar>(
    op: &ProjectionOperator<T>,
    mesh: &Mesh<T>,
    spec: &CostSpec<T>,
    p: &DensityField<T>,
    m: &FluxField<T>,
) -> Result<KktResidual<T>, DomainError> {
    let (gp, gm) = weighted_gradient(mesh, spec, p, m)?;
    let mut rhs = time_diff_homogeneous(&gp);
    rhs.axpy(T::one(), &space_divergence(mesh, &gm));
    let psi = op.solve(&rhs);

    let mut e_p = gp;
    e_p.axpy(-T::one(), &time_diff_adjoint(&psi));
    for (e, x) in e_p.as_mut_slice().iter_mut().zip(p.steps().as_slice()) {
        *e = e.min(*x);
    }
    let mut e_m = gm;
    e_m.axpy(T::one(), &space_gradient(mesh, &psi));
    let e_c = continuity_residual(mesh, p, m);

    Ok(KktResidual {
        density: vertex_time_norm(mesh, &e_p),
        flux: triangle_time_norm(mesh, &e_m),
        continuity: vertex_time_norm(mesh, &e_c),
    })
}
