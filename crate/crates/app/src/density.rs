//! Densities synthesized from geodesic Gaussian bumps.

use mfg_core::mesh::{distances_from, DistanceMetric};
use mfg_core::TriMesh;

use crate::error::AppError;

/// A bump resolved to a mesh vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexBump {
    pub vertex: usize,
    pub width: f64,
    pub weight: f64,
}

/// Index of the vertex closest (in the embedding) to `x`.
pub fn nearest_vertex(mesh: &TriMesh, x: [f64; 3]) -> usize {
    let d2 = |v: &[f64; 3]| (0..3).map(|d| (v[d] - x[d]).powi(2)).sum::<f64>();
    mesh.vertices()
        .iter()
        .enumerate()
        .min_by(|a, b| d2(a.1).total_cmp(&d2(b.1)))
        .map(|(i, _)| i)
        .expect("mesh has vertices")
}

/// `Σ_b weight_b exp(-d(center_b, V_i)^2 / width_b^2)`, scaled to unit mass.
pub fn synth_density(mesh: &TriMesh, bumps: &[VertexBump], metric: DistanceMetric) -> Result<Vec<f64>, AppError> {
    if bumps.is_empty() {
        return Err(AppError::Invalid("density needs at least one bump".into()));
    }
    let mut p = vec![0.0; mesh.num_vertices()];
    for b in bumps {
        if b.vertex >= mesh.num_vertices() {
            return Err(AppError::Invalid(format!(
                "bump vertex {} out of range (mesh has {})",
                b.vertex,
                mesh.num_vertices()
            )));
        }
        if !(b.width > 0.0) {
            return Err(AppError::Invalid(format!("bump width must be positive, got {}", b.width)));
        }
        let d = distances_from(mesh, b.vertex, metric);
        for (pi, di) in p.iter_mut().zip(d) {
            *pi += b.weight * (-(di * di) / (b.width * b.width)).exp();
        }
    }
    normalize(mesh, p)
}

/// Scales a nonnegative vector to unit mass `Σ A_V P = 1`.
pub fn normalize(mesh: &TriMesh, mut p: Vec<f64>) -> Result<Vec<f64>, AppError> {
    if let Some(i) = p.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(AppError::Invalid(format!("density entry {i} is {}", p[i])));
    }
    let mass = mesh.mass(&p);
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(AppError::Invalid("density vanishes everywhere on the mesh".into()));
    }
    for v in &mut p {
        *v /= mass;
    }
    Ok(p)
}

/// `(1 - b) P + b / area`, still of unit mass.
pub fn mix_uniform(mesh: &TriMesh, p: &[f64], background: f64) -> Vec<f64> {
    let uniform = 1.0 / mesh.total_area();
    p.iter().map(|v| (1.0 - background) * v + background * uniform).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use mfg_core::mesh::{make_flat_grid, make_icosphere};

    #[test]
    fn single_bump_has_unit_mass() {
        let mesh: TriMesh = make_icosphere(2, 1.0);
        let b = VertexBump {
            vertex: 7,
            width: 0.4,
            weight: 3.0,
        };
        let p = synth_density(&mesh, &[b], DistanceMetric::Graph).unwrap();
        assert!((mesh.mass(&p) - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn duplicate_bumps_match_single() {
        let mesh: TriMesh = make_icosphere(2, 1.0);
        let b = VertexBump {
            vertex: 3,
            width: 0.5,
            weight: 1.0,
        };
        let one = synth_density(&mesh, &[b], DistanceMetric::Sphere).unwrap();
        let two = synth_density(&mesh, &[b, b], DistanceMetric::Sphere).unwrap();
        for (a, c) in one.iter().zip(&two) {
            assert!((a - c).abs() < 1e-14);
        }
    }

    #[test]
    fn centered_bump_is_reflection_symmetric() {
        let (nx, ny) = (10, 10);
        let mesh: TriMesh = make_flat_grid(nx, ny, 1.0, 1.0);
        let center = nearest_vertex(&mesh, [0.5, 0.5, 0.0]);
        let b = VertexBump {
            vertex: center,
            width: 0.2,
            weight: 1.0,
        };
        let p = synth_density(&mesh, &[b], DistanceMetric::Euclidean).unwrap();
        for j in 0..=ny {
            for i in 0..=nx {
                let a = p[j * (nx + 1) + i];
                assert!((a - p[j * (nx + 1) + (nx - i)]).abs() < 1e-10);
                assert!((a - p[(ny - j) * (nx + 1) + i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn underflow_everywhere_is_an_error() {
        let mesh: TriMesh = make_flat_grid(4, 4, 1.0, 1.0);
        let b = VertexBump {
            vertex: 0,
            width: 1.0,
            weight: 0.0,
        };
        assert!(matches!(synth_density(&mesh, &[b], DistanceMetric::Graph), Err(AppError::Invalid(_))));
    }

    #[test]
    fn uniform_mixture_keeps_mass() {
        let mesh: TriMesh = make_flat_grid(4, 4, 2.0, 1.0);
        let p = normalize(&mesh, (0..25).map(|i| i as f64).collect()).unwrap();
        let q = mix_uniform(&mesh, &p, 0.3);
        assert!((mesh.mass(&q) - 1.0).abs() < 1e-12);
    }
}
