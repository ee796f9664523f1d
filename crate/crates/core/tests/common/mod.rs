#![allow(dead_code)]

use mfg_core::mesh::{make_flat_grid, make_icosphere};
use mfg_core::{DensityField, FluxField, Mesh, ProjectionOperator, VertexSeries};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn icosphere(subdivisions: u32) -> Mesh<f64> {
    make_icosphere(subdivisions, 1.0)
}

pub fn unit_grid(cells: usize) -> Mesh<f64> {
    make_flat_grid(cells, cells, 1.0, 1.0)
}

pub fn random_values(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Random vector in the plane of triangle `j`: a combination of two edges.
pub fn random_tangent(mesh: &Mesh<f64>, j: usize, rng: &mut ChaCha8Rng, scale: f64) -> [f64; 3] {
    let [a, b, c] = mesh.triangles()[j];
    let v = mesh.vertices();
    let e1 = [v[b][0] - v[a][0], v[b][1] - v[a][1], v[b][2] - v[a][2]];
    let e2 = [v[c][0] - v[a][0], v[c][1] - v[a][1], v[c][2] - v[a][2]];
    let len = (e1.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let (s, t) = (rng.gen_range(-1.0..1.0) * scale / len, rng.gen_range(-1.0..1.0) * scale / len);
    [s * e1[0] + t * e2[0], s * e1[1] + t * e2[1], s * e1[2] + t * e2[2]]
}

pub fn random_flux(mesh: &Mesh<f64>, n: usize, rng: &mut ChaCha8Rng, scale: f64) -> FluxField<f64> {
    let s = mesh.num_triangles();
    let data = (0..s * n).map(|idx| random_tangent(mesh, idx % s, rng, scale)).collect();
    FluxField::from_vec(s, n, data)
}

pub fn random_series(mesh: &Mesh<f64>, n: usize, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> VertexSeries<f64> {
    let h = mesh.num_vertices();
    VertexSeries::from_vec(h, n, random_values(rng, h * n, lo, hi))
}

/// Uniform density of unit mass.
pub fn uniform_density(mesh: &Mesh<f64>) -> Vec<f64> {
    vec![1.0 / mesh.total_area(); mesh.num_vertices()]
}

/// Random positive unit-mass density: uniform times `1 ± spread`, renormalized.
pub fn random_density(mesh: &Mesh<f64>, rng: &mut ChaCha8Rng, spread: f64) -> Vec<f64> {
    let p: Vec<f64> = (0..mesh.num_vertices()).map(|_| 1.0 + rng.gen_range(-spread..spread)).collect();
    let mass = mesh.mass(&p);
    p.into_iter().map(|x| x / mass).collect()
}

/// Feasible point near `P ≡ 1`: a small random perturbation projected onto
/// the continuity constraint with `P₀ ≡ 1`.
pub fn feasible_point(
    op: &ProjectionOperator<f64>,
    mesh: &Mesh<f64>,
    rng: &mut ChaCha8Rng,
    amplitude: f64,
) -> (DensityField<f64>, FluxField<f64>) {
    let n = op.num_steps();
    let initial = vec![1.0; mesh.num_vertices()];
    let ph = random_series(mesh, n, rng, 1.0 - amplitude, 1.0 + amplitude);
    let mh = random_flux(mesh, n, rng, amplitude);
    op.project(mesh, &ph, &mh, &initial)
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}
