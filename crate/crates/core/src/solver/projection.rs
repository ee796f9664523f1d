//! Exact projection onto the discrete continuity constraint.
//!
//! The dual variable Ψ of `D_t P + ∇·M = 0` solves
//! `(D_t D_t* − ∇·∇) Ψ = D_t P̂ + ∇·M̂`. Multiplying by `A_V` gives the SPD
//! system `(T ⊗ A_V + I ⊗ S) Ψ = A_V r`, where `T = n² B Bᵀ` is the
//! tridiagonal time operator and `S` the stiffness matrix. Diagonalizing the
//! small `n × n` matrix `T = Q Λ Qᵀ` splits it into `n` sparse systems
//! `(λ_k A_V + S) y_k = c_k`, each factored once by envelope Cholesky.

use rayon::prelude::*;

use crate::error::SolveError;
use crate::field::{
    space_divergence, space_gradient, time_diff, time_diff_adjoint, time_diff_homogeneous, DensityField, DualField,
    FluxField, VertexSeries,
};
use crate::linalg::{reverse_cuthill_mckee, symmetric_eigen, SkylineCholesky};
use crate::mesh::Mesh;
use crate::scalar::Scalar;

/// Precomputed solver for the space-time operator `D_t D_t* − ∇·∇`.
#[derive(Debug, Clone)]
pub struct ProjectionOperator<T> {
    h: usize,
    n: usize,
    /// Eigenvectors of the time operator, column `k` is mode `k` (row-major `n × n`).
    time_vectors: Vec<T>,
    time_values: Vec<T>,
    modes: Vec<SkylineCholesky<T>>,
    vertex_area: Vec<T>,
}

/// `T = n² B Bᵀ`: `T[0][0] = n²`, other diagonal entries `2n²`, off-diagonals `−n²`.
pub fn time_operator<T: Scalar>(n: usize) -> Vec<T> {
    let nn = T::from_count(n * n);
    let mut t = vec![T::zero(); n * n];
    for k in 0..n {
        t[k * n + k] = if k == 0 { nn } else { T::lit(2.0) * nn };
        if k + 1 < n {
            t[k * n + k + 1] = -nn;
            t[(k + 1) * n + k] = -nn;
        }
    }
    t
}

impl<T: Scalar> ProjectionOperator<T> {
    pub fn build(mesh: &Mesh<T>, n: usize) -> Result<Self, SolveError> {
        if n == 0 {
            return Err(SolveError::Options("number of time steps must be at least 1".into()));
        }
        let h = mesh.num_vertices();
        let (time_values, time_vectors) = symmetric_eigen(n, &time_operator::<T>(n));
        let stiffness = mesh.stiffness();
        let area = mesh.vertex_areas().to_vec();
        let pattern = stiffness.add_diagonal(&area);
        let perm = reverse_cuthill_mckee(&pattern);
        let modes = time_values
            .par_iter()
            .enumerate()
            .map(|(k, lambda)| {
                let shift: Vec<T> = area.iter().map(|a| *lambda * *a).collect();
                SkylineCholesky::factor(&stiffness.add_diagonal(&shift), &perm).map_err(|e| {
                    SolveError::Factorization {
                        mode: k,
                        pivot: e.pivot,
                        value: e.value,
                    }
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            h,
            n,
            time_vectors,
            time_values,
            modes,
            vertex_area: area,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.h
    }

    pub fn num_steps(&self) -> usize {
        self.n
    }

    /// Eigenvalues of the time operator, one per decoupled spatial system.
    pub fn time_eigenvalues(&self) -> &[T] {
        &self.time_values
    }

    /// Total stored entries across all Cholesky factors.
    pub fn factor_size(&self) -> usize {
        self.modes.iter().map(SkylineCholesky::envelope_len).sum()
    }

    /// Solves `(D_t D_t* − ∇·∇) Ψ = rhs`.
    pub fn solve(&self, rhs: &DualField<T>) -> DualField<T> {
        let (h, n) = (self.h, self.n);
        assert_eq!((rhs.num_vertices(), rhs.num_steps()), (h, n), "rhs shape");
        let q = &self.time_vectors;
        let y: Vec<Vec<T>> = self
            .modes
            .par_iter()
            .enumerate()
            .map(|(k, factor)| {
                let mut c = vec![T::zero(); h];
                for l in 0..n {
                    let qlk = q[l * n + k];
                    for ((ci, r), a) in c.iter_mut().zip(rhs.slice(l)).zip(&self.vertex_area) {
                        *ci += qlk * *a * *r;
                    }
                }
                factor.solve(&c)
            })
            .collect();
        let mut psi = VertexSeries::zeros(h, n);
        for l in 0..n {
            let out = psi.slice_mut(l);
            for (k, yk) in y.iter().enumerate() {
                let qlk = q[l * n + k];
                for (o, v) in out.iter_mut().zip(yk) {
                    *o += qlk * *v;
                }
            }
        }
        psi
    }

    /// Applies `D_t D_t* − ∇·∇` directly through the field operators.
    pub fn apply(&self, mesh: &Mesh<T>, psi: &DualField<T>) -> DualField<T> {
        let mut out = time_diff_homogeneous(&time_diff_adjoint(psi));
        out.axpy(-T::one(), &space_divergence(mesh, &space_gradient(mesh, psi)));
        out
    }

    /// Closest point (in the area- and time-weighted norm) to `(P̂, M̂)`
    /// satisfying `D_t P + ∇·M = 0` with `P(·, t_0) = P₀`.
    pub fn project(
        &self,
        mesh: &Mesh<T>,
        p_half: &VertexSeries<T>,
        m_half: &FluxField<T>,
        initial: &[T],
    ) -> (DensityField<T>, FluxField<T>) {
        let p_hat = DensityField::new(initial.to_vec(), p_half.clone());
        let mut rhs = time_diff(&p_hat);
        rhs.axpy(T::one(), &space_divergence(mesh, m_half));
        let psi = self.solve(&rhs);

        let mut p = p_half.clone();
        p.axpy(-T::one(), &time_diff_adjoint(&psi));
        let mut m = m_half.clone();
        m.axpy(T::one(), &space_gradient(mesh, &psi));
        (DensityField::new(initial.to_vec(), p), m)
    }
}
