use rayon::prelude::*;

use super::{distances_from, DistanceMetric, Mesh};
use crate::scalar::Scalar;

/// Dense symmetric `h × h` interaction kernel between vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel<T> {
    size: usize,
    data: Vec<T>,
}

impl<T: Scalar> Kernel<T> {
    /// Takes a row-major matrix and stores its symmetric part `½(K + Kᵀ)`.
    pub fn from_row_major(size: usize, mut data: Vec<T>) -> Self {
        assert_eq!(data.len(), size * size, "kernel must be square");
        let half = T::lit(0.5);
        for i in 0..size {
            for j in (i + 1)..size {
                let v = half * (data[i * size + j] + data[j * size + i]);
                data[i * size + j] = v;
                data[j * size + i] = v;
            }
        }
        Self { size, data }
    }

    /// Constant kernel, every entry `value`.
    pub fn constant(size: usize, value: T) -> Self {
        Self {
            size,
            data: vec![value; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.size..(i + 1) * self.size]
    }

    /// `K x`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.size);
        (0..self.size)
            .map(|i| self.row(i).iter().zip(x).map(|(k, v)| *k * *v).sum())
            .collect()
    }

    /// `A_V K A_V p`, the gradient of `½ pᵀ A_V K A_V p`.
    pub fn weighted_apply(&self, mesh: &Mesh<T>, p: &[T]) -> Vec<T> {
        let a = mesh.vertex_areas();
        let ap: Vec<T> = p.iter().zip(a).map(|(x, w)| *x * *w).collect();
        self.apply(&ap).into_iter().zip(a).map(|(x, w)| x * *w).collect()
    }

    /// `½ pᵀ A_V K A_V p`.
    pub fn quadratic_form(&self, mesh: &Mesh<T>, p: &[T]) -> T {
        let a = mesh.vertex_areas();
        let ap: Vec<T> = p.iter().zip(a).map(|(x, w)| *x * *w).collect();
        let kap = self.apply(&ap);
        T::lit(0.5) * ap.iter().zip(&kap).map(|(x, y)| *x * *y).sum::<T>()
    }

    /// Largest `|K(i,j) - K(j,i)|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.size {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// `K(i, j) = μ exp(-d(i, j)² / σ²)` with `d` measured by `metric`.
pub fn gaussian_kernel<T: Scalar>(mesh: &Mesh<T>, mu: T, sigma: T, metric: DistanceMetric) -> Kernel<T> {
    assert!(sigma > T::zero(), "gaussian kernel needs sigma > 0");
    let h = mesh.num_vertices();
    let inv = T::one() / (sigma * sigma);
    let rows: Vec<Vec<T>> = (0..h)
        .into_par_iter()
        .map(|i| {
            distances_from(mesh, i, metric)
                .into_iter()
                .map(|d| if d.is_finite() { mu * (-(d * d) * inv).exp() } else { T::zero() })
                .collect()
        })
        .collect();
    Kernel::from_row_major(h, rows.concat())
}

/// Kernel whose weighted quadratic form is the Dirichlet energy:
/// `K = A_V⁻¹ S A_V⁻¹` with `S = Σ_d (G^d)ᵀ A_T G^d`, so that
/// `½ pᵀ A_V K A_V p = ½ Σ_j A_T(j) |∇p(T_j)|²`.
pub fn laplacian_kernel<T: Scalar>(mesh: &Mesh<T>) -> Kernel<T> {
    let h = mesh.num_vertices();
    let a = mesh.vertex_areas();
    let s = mesh.stiffness();
    let mut data = vec![T::zero(); h * h];
    for i in 0..h {
        for (j, v) in s.row(i) {
            data[i * h + j] = v / (a[i] * a[j]);
        }
    }
    Kernel::from_row_major(h, data)
}
