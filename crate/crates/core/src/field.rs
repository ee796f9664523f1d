//! Space-time fields on the uniform time grid `t_k = k/n`.
//!
//! Densities live on vertices at the central steps `t_1..t_n` (with the fixed
//! initial slice at `t_0`); fluxes live on triangles at the staggered steps
//! `t_{k-1/2}`, as do the dual variables of the continuity constraint. All
//! storage is slice-major: the values of one time step are contiguous.

use serde::{Deserialize, Serialize};

use crate::error::DomainError;
use crate::mesh::Mesh;
use crate::scalar::{dot, norm, Scalar, Vec3};

/// Vertex values at `n` time steps, slice-major. Used for densities at central
/// steps, for the dual variable Ψ at staggered steps, and for residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexSeries<T> {
    h: usize,
    n: usize,
    data: Vec<T>,
}

/// Dual variable of the continuity constraint, on vertices × staggered steps.
pub type DualField<T> = VertexSeries<T>;

impl<T: Scalar> VertexSeries<T> {
    pub fn zeros(h: usize, n: usize) -> Self {
        Self {
            h,
            n,
            data: vec![T::zero(); h * n],
        }
    }

    pub fn from_vec(h: usize, n: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), h * n, "series length must be h·n");
        Self { h, n, data }
    }

    /// Every step equal to `slice`.
    pub fn repeated(slice: &[T], n: usize) -> Self {
        let mut data = Vec::with_capacity(slice.len() * n);
        for _ in 0..n {
            data.extend_from_slice(slice);
        }
        Self { h: slice.len(), n, data }
    }

    pub fn num_vertices(&self) -> usize {
        self.h
    }

    pub fn num_steps(&self) -> usize {
        self.n
    }

    /// Slice `k` in `0..n` (step `t_{k+1}` for densities, `t_{k+1/2}` for duals).
    pub fn slice(&self, k: usize) -> &[T] {
        &self.data[k * self.h..(k + 1) * self.h]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [T] {
        &mut self.data[k * self.h..(k + 1) * self.h]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: T, other: &Self) {
        assert_eq!((self.h, self.n), (other.h, other.n));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * *b;
        }
    }

    pub fn min_value(&self) -> T {
        self.data
            .iter()
            .copied()
            .fold(T::infinity(), |a, b| if a.is_nan() || b.is_nan() { T::nan() } else { a.min(b) })
    }
}

/// Density on central steps together with the fixed initial slice `P₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField<T> {
    initial: Vec<T>,
    steps: VertexSeries<T>,
}

impl<T: Scalar> DensityField<T> {
    pub fn new(initial: Vec<T>, steps: VertexSeries<T>) -> Self {
        assert_eq!(initial.len(), steps.num_vertices(), "initial slice length");
        Self { initial, steps }
    }

    /// `P(·, t_k) = P₀` for every `k`.
    pub fn constant(initial: Vec<T>, n: usize) -> Self {
        let steps = VertexSeries::repeated(&initial, n);
        Self { initial, steps }
    }

    pub fn num_vertices(&self) -> usize {
        self.initial.len()
    }

    pub fn num_steps(&self) -> usize {
        self.steps.num_steps()
    }

    pub fn initial(&self) -> &[T] {
        &self.initial
    }

    pub fn steps(&self) -> &VertexSeries<T> {
        &self.steps
    }

    pub fn steps_mut(&mut self) -> &mut VertexSeries<T> {
        &mut self.steps
    }

    /// `P(·, t_k)` for `k` in `0..=n`; `k = 0` is the initial slice.
    pub fn at(&self, k: usize) -> &[T] {
        if k == 0 {
            &self.initial
        } else {
            self.steps.slice(k - 1)
        }
    }

    pub fn terminal(&self) -> &[T] {
        self.at(self.num_steps())
    }
}

/// Per-triangle tangent vectors at the `n` staggered steps, slice-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxField<T> {
    s: usize,
    n: usize,
    data: Vec<Vec3<T>>,
}

impl<T: Scalar> FluxField<T> {
    pub fn zeros(s: usize, n: usize) -> Self {
        Self {
            s,
            n,
            data: vec![[T::zero(); 3]; s * n],
        }
    }

    pub fn from_vec(s: usize, n: usize, data: Vec<Vec3<T>>) -> Self {
        assert_eq!(data.len(), s * n, "flux length must be s·n");
        Self { s, n, data }
    }

    pub fn num_triangles(&self) -> usize {
        self.s
    }

    pub fn num_steps(&self) -> usize {
        self.n
    }

    /// Slice `k` in `0..n`, i.e. step `t_{k+1/2}`.
    pub fn slice(&self, k: usize) -> &[Vec3<T>] {
        &self.data[k * self.s..(k + 1) * self.s]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [Vec3<T>] {
        &mut self.data[k * self.s..(k + 1) * self.s]
    }

    pub fn as_slice(&self) -> &[Vec3<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Vec3<T>] {
        &mut self.data
    }

    pub fn axpy(&mut self, alpha: T, other: &Self) {
        assert_eq!((self.s, self.n), (other.s, other.n));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            for d in 0..3 {
                a[d] += alpha * b[d];
            }
        }
    }

    /// Largest normal component `|M·n|` relative to the largest flux
    /// magnitude; per-triangle ratios would be dominated by rounding on
    /// triangles where the flux nearly cancels.
    pub fn max_normal_fraction(&self, mesh: &Mesh<T>) -> T {
        let s = self.s;
        let (normal, size) = self
            .data
            .iter()
            .enumerate()
            .fold((T::zero(), T::zero()), |(a, b), (idx, m)| {
                (a.max(dot(*m, mesh.normals()[idx % s]).abs()), b.max(norm(*m)))
            });
        if size == T::zero() {
            T::zero()
        } else {
            normal / size
        }
    }
}

/// `(D_t P)(·, t_{k-1/2}) = n (P(·, t_k) - P(·, t_{k-1}))`, with `P(·, t_0) = P₀`.
pub fn time_diff<T: Scalar>(p: &DensityField<T>) -> DualField<T> {
    let (h, n) = (p.num_vertices(), p.num_steps());
    let nf = T::from_count(n);
    let mut out = VertexSeries::zeros(h, n);
    for k in 1..=n {
        let (cur, prev) = (p.at(k), p.at(k - 1));
        for ((o, a), b) in out.slice_mut(k - 1).iter_mut().zip(cur).zip(prev) {
            *o = nf * (*a - *b);
        }
    }
    out
}

/// The linear part of `D_t`: the same difference with the initial slice taken as zero.
pub fn time_diff_homogeneous<T: Scalar>(p: &VertexSeries<T>) -> DualField<T> {
    let (h, n) = (p.num_vertices(), p.num_steps());
    let nf = T::from_count(n);
    let mut out = VertexSeries::zeros(h, n);
    for k in 0..n {
        for i in 0..h {
            let prev = if k == 0 { T::zero() } else { p.slice(k - 1)[i] };
            out.slice_mut(k)[i] = nf * (p.slice(k)[i] - prev);
        }
    }
    out
}

/// `(D_t* Ψ)(·, t_k) = n (Ψ(·, t_{k-1/2}) - Ψ(·, t_{k+1/2}))`, with `Ψ(·, t_{n+1/2}) = 0`.
///
/// Adjoint of the homogeneous `D_t` under the `1/n`-weighted vertex inner product.
pub fn time_diff_adjoint<T: Scalar>(psi: &DualField<T>) -> VertexSeries<T> {
    let (h, n) = (psi.num_vertices(), psi.num_steps());
    let nf = T::from_count(n);
    let mut out = VertexSeries::zeros(h, n);
    for k in 0..n {
        for i in 0..h {
            let next = if k + 1 < n { psi.slice(k + 1)[i] } else { T::zero() };
            out.slice_mut(k)[i] = nf * (psi.slice(k)[i] - next);
        }
    }
    out
}

/// Rule turning three vertex densities into one triangle density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    #[default]
    Arithmetic,
    Geometric,
    Harmonic,
}

impl Averaging {
    /// Mean of three values; geometric and harmonic require positive input.
    pub fn mean<T: Scalar>(self, v: [T; 3]) -> T {
        match self {
            Averaging::Arithmetic => (v[0] + v[1] + v[2]) / T::lit(3.0),
            Averaging::Geometric => (v[0] * v[1] * v[2]).cbrt(),
            Averaging::Harmonic => T::lit(3.0) / (v[0].recip() + v[1].recip() + v[2].recip()),
        }
    }

    /// `∂w/∂v_a` for each of the three inputs.
    pub fn partials<T: Scalar>(self, v: [T; 3]) -> [T; 3] {
        let third = T::one() / T::lit(3.0);
        match self {
            Averaging::Arithmetic => [third; 3],
            Averaging::Geometric => {
                let w = self.mean(v);
                [w * third / v[0], w * third / v[1], w * third / v[2]]
            }
            Averaging::Harmonic => {
                let w = self.mean(v);
                let c = w * w * third;
                [c / (v[0] * v[0]), c / (v[1] * v[1]), c / (v[2] * v[2])]
            }
        }
    }

    fn needs_positive(self) -> bool {
        !matches!(self, Averaging::Arithmetic)
    }
}

/// `W(P)`: per-triangle average of a vertex slice.
pub fn average_density<T: Scalar>(mesh: &Mesh<T>, slice: &[T], mode: Averaging) -> Result<Vec<T>, DomainError> {
    assert_eq!(slice.len(), mesh.num_vertices());
    if mode.needs_positive() {
        if let Some((index, v)) = slice.iter().enumerate().find(|(_, v)| !(**v > T::zero())) {
            return Err(DomainError::NonPositive {
                what: "density average",
                index,
                value: v.to_f64_lossy(),
            });
        }
    }
    Ok(mesh
        .triangles()
        .iter()
        .map(|t| mode.mean([slice[t[0]], slice[t[1]], slice[t[2]]]))
        .collect())
}

/// `ρ̄(·, t_{k-1/2}) = ½ W(P(·, t_k)) + ½ W(P(·, t_{k-1}))` for `k = 1..n`,
/// returned as `n` slices of `s` values.
pub fn staggered_density<T: Scalar>(
    mesh: &Mesh<T>,
    p: &DensityField<T>,
    mode: Averaging,
) -> Result<Vec<Vec<T>>, DomainError> {
    let n = p.num_steps();
    let averaged: Vec<Vec<T>> = (0..=n)
        .map(|k| average_density(mesh, p.at(k), mode))
        .collect::<Result<_, _>>()?;
    let half = T::lit(0.5);
    Ok((1..=n)
        .map(|k| {
            averaged[k]
                .iter()
                .zip(&averaged[k - 1])
                .map(|(a, b)| half * (*a + *b))
                .collect()
        })
        .collect())
}

/// `⟨a, b⟩_{V,t} = (1/n) Σ_k ⟨a_k, b_k⟩_V`.
pub fn vertex_time_inner<T: Scalar>(mesh: &Mesh<T>, a: &VertexSeries<T>, b: &VertexSeries<T>) -> T {
    assert_eq!(a.num_steps(), b.num_steps());
    let n = a.num_steps();
    let total: T = (0..n).map(|k| mesh.vertex_inner(a.slice(k), b.slice(k))).sum();
    total / T::from_count(n)
}

/// `⟨u, v⟩_{T,t} = (1/n) Σ_k ⟨u_k, v_k⟩_T`.
pub fn triangle_time_inner<T: Scalar>(mesh: &Mesh<T>, u: &FluxField<T>, v: &FluxField<T>) -> T {
    assert_eq!(u.num_steps(), v.num_steps());
    let n = u.num_steps();
    let total: T = (0..n).map(|k| mesh.triangle_inner(u.slice(k), v.slice(k))).sum();
    total / T::from_count(n)
}

pub fn vertex_time_norm<T: Scalar>(mesh: &Mesh<T>, a: &VertexSeries<T>) -> T {
    vertex_time_inner(mesh, a, a).max(T::zero()).sqrt()
}

pub fn triangle_time_norm<T: Scalar>(mesh: &Mesh<T>, u: &FluxField<T>) -> T {
    triangle_time_inner(mesh, u, u).max(T::zero()).sqrt()
}

/// Per-step gradient `∇Ψ(·, t_{k-1/2})`.
pub fn space_gradient<T: Scalar>(mesh: &Mesh<T>, psi: &DualField<T>) -> FluxField<T> {
    let n = psi.num_steps();
    let mut out = FluxField::zeros(mesh.num_triangles(), n);
    for k in 0..n {
        mesh.gradient_into(psi.slice(k), out.slice_mut(k));
    }
    out
}

/// Per-step divergence `∇·M(·, t_{k-1/2})`.
pub fn space_divergence<T: Scalar>(mesh: &Mesh<T>, m: &FluxField<T>) -> DualField<T> {
    let n = m.num_steps();
    let mut out = VertexSeries::zeros(mesh.num_vertices(), n);
    for k in 0..n {
        mesh.divergence_into(m.slice(k), out.slice_mut(k));
    }
    out
}

/// `D_t P + ∇·M`, the continuity-equation residual at every staggered step.
pub fn continuity_residual<T: Scalar>(mesh: &Mesh<T>, p: &DensityField<T>, m: &FluxField<T>) -> DualField<T> {
    let mut r = time_diff(p);
    r.axpy(T::one(), &space_divergence(mesh, m));
    r
}
