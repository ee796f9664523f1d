//! Triangle meshes and the piecewise-linear calculus living on them.
//!
//! Scalar functions are stored per vertex and interpolated linearly on each
//! triangle; vector fields are constant per triangle and tangent to it. The
//! gradient of a vertex function is assembled from one 3×3 block per
//! triangle, and the divergence is defined as the negative adjoint of the
//! gradient under the area-weighted inner products, so
//! `⟨-∇ψ, u⟩_T = ⟨ψ, ∇·u⟩_V` holds by construction.

mod generate;
mod geodesic;
pub mod io;
mod kernel;

pub use generate::{make_flat_grid, make_icosphere, make_punctured_grid};
pub use geodesic::{distances_from, geodesic_distances, sphere_distances, DistanceMetric};
pub use kernel::{gaussian_kernel, laplacian_kernel, Kernel};

use crate::error::MeshError;
use crate::linalg::CsrMatrix;
use crate::scalar::{cross, dot, norm, sub, Scalar, Vec3};

/// A consistently oriented triangle mesh with its precomputed geometry.
#[derive(Debug, Clone)]
pub struct Mesh<T> {
    vertices: Vec<Vec3<T>>,
    triangles: Vec<[usize; 3]>,
    triangle_area: Vec<T>,
    vertex_area: Vec<T>,
    /// `grad_blocks[j][d][a]` is `G^d(T_j, V_{triangles[j][a]})`.
    grad_blocks: Vec<[[T; 3]; 3]>,
    normals: Vec<Vec3<T>>,
    neighbor_offsets: Vec<usize>,
    neighbors: Vec<usize>,
    boundary_edges: usize,
}

impl<T: Scalar> Mesh<T> {
    /// Builds a mesh and all derived quantities.
    ///
    /// Faces whose area is below a rounding-level threshold relative to their
    /// longest edge are rejected, as are vertices that belong to no face.
    pub fn new(vertices: Vec<Vec3<T>>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        let h = vertices.len();
        for (face, tri) in triangles.iter().enumerate() {
            for &index in tri {
                if index >= h {
                    return Err(MeshError::IndexOutOfRange { face, index, count: h });
                }
            }
        }

        let s = triangles.len();
        let mut triangle_area = Vec::with_capacity(s);
        let mut grad_blocks = Vec::with_capacity(s);
        let mut normals = Vec::with_capacity(s);
        let half = T::lit(0.5);
        let tiny = T::epsilon() * T::lit(16.0);

        for (face, tri) in triangles.iter().enumerate() {
            let v0 = vertices[tri[0]];
            let e1 = sub(vertices[tri[1]], v0);
            let e2 = sub(vertices[tri[2]], v0);
            let n = cross(e1, e2);
            let twice_area = norm(n);
            let area = half * twice_area;
            let scale = dot(e1, e1).max(dot(e2, e2)).max(dot(sub(e2, e1), sub(e2, e1)));
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] || !(area > tiny * scale) {
                return Err(MeshError::DegenerateTriangle {
                    face,
                    area: area.to_f64_lossy(),
                });
            }

            // Induced metric g = EᵀE with E = (e1, e2); det g = |e1 × e2|².
            let g11 = dot(e1, e1);
            let g12 = dot(e1, e2);
            let g22 = dot(e2, e2);
            let det = twice_area * twice_area;
            let inv = [[g22 / det, -g12 / det], [-g12 / det, g11 / det]];
            // Columns of g⁻¹ · [[-1, 1, 0], [-1, 0, 1]].
            let coeff = [
                [-(inv[0][0] + inv[0][1]), -(inv[1][0] + inv[1][1])],
                [inv[0][0], inv[1][0]],
                [inv[0][1], inv[1][1]],
            ];
            let mut block = [[T::zero(); 3]; 3];
            for (d, row) in block.iter_mut().enumerate() {
                for (a, entry) in row.iter_mut().enumerate() {
                    *entry = e1[d] * coeff[a][0] + e2[d] * coeff[a][1];
                }
            }
            triangle_area.push(area);
            grad_blocks.push(block);
            normals.push([n[0] / twice_area, n[1] / twice_area, n[2] / twice_area]);
        }

        let third = T::one() / T::lit(3.0);
        let mut vertex_area = vec![T::zero(); h];
        for (tri, &area) in triangles.iter().zip(&triangle_area) {
            for &i in tri {
                vertex_area[i] += third * area;
            }
        }
        if let Some(vertex) = vertex_area.iter().position(|a| *a <= T::zero()) {
            return Err(MeshError::IsolatedVertex { vertex });
        }

        let (neighbor_offsets, neighbors, boundary_edges) = build_adjacency(h, &triangles);

        Ok(Self {
            vertices,
            triangles,
            triangle_area,
            vertex_area,
            grad_blocks,
            normals,
            neighbor_offsets,
            neighbors,
            boundary_edges,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle_areas(&self) -> &[T] {
        &self.triangle_area
    }

    /// Barycentric dual-cell areas: a third of the area of every incident face.
    pub fn vertex_areas(&self) -> &[T] {
        &self.vertex_area
    }

    /// Per-triangle gradient blocks, indexed `[triangle][component][local vertex]`.
    pub fn gradient_blocks(&self) -> &[[[T; 3]; 3]] {
        &self.grad_blocks
    }

    /// Unit normals, oriented by the vertex order of each face.
    pub fn normals(&self) -> &[Vec3<T>] {
        &self.normals
    }

    /// Vertices sharing a triangle with `i`, sorted ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.neighbor_offsets[i]..self.neighbor_offsets[i + 1]]
    }

    /// Number of edges with exactly one incident face.
    pub fn boundary_edge_count(&self) -> usize {
        self.boundary_edges
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_edges == 0
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn total_area(&self) -> T {
        self.triangle_area.iter().copied().sum()
    }

    /// `Σ_i A_V(i) p(i)`.
    pub fn mass(&self, p: &[T]) -> T {
        self.vertex_inner(p, &vec![T::one(); p.len()])
    }

    /// `⟨a, b⟩_V = aᵀ A_V b`.
    pub fn vertex_inner(&self, a: &[T], b: &[T]) -> T {
        debug_assert_eq!(a.len(), self.num_vertices());
        debug_assert_eq!(b.len(), self.num_vertices());
        a.iter()
            .zip(b)
            .zip(&self.vertex_area)
            .map(|((x, y), w)| *w * *x * *y)
            .sum()
    }

    /// `⟨u, v⟩_T = Σ_d (u^d)ᵀ A_T v^d`.
    pub fn triangle_inner(&self, u: &[Vec3<T>], v: &[Vec3<T>]) -> T {
        debug_assert_eq!(u.len(), self.num_triangles());
        debug_assert_eq!(v.len(), self.num_triangles());
        u.iter()
            .zip(v)
            .zip(&self.triangle_area)
            .map(|((a, b), w)| *w * dot(*a, *b))
            .sum()
    }

    /// Piecewise-constant gradient of a vertex function.
    pub fn gradient(&self, psi: &[T]) -> Vec<Vec3<T>> {
        let mut out = vec![[T::zero(); 3]; self.num_triangles()];
        self.gradient_into(psi, &mut out);
        out
    }

    pub fn gradient_into(&self, psi: &[T], out: &mut [Vec3<T>]) {
        assert_eq!(psi.len(), self.num_vertices(), "gradient: psi length");
        assert_eq!(out.len(), self.num_triangles(), "gradient: output length");
        for ((tri, block), g) in self.triangles.iter().zip(&self.grad_blocks).zip(out.iter_mut()) {
            let local = [psi[tri[0]], psi[tri[1]], psi[tri[2]]];
            for d in 0..3 {
                g[d] = block[d][0] * local[0] + block[d][1] * local[1] + block[d][2] * local[2];
            }
        }
    }

    /// `∇·u = -A_V⁻¹ Σ_d (G^d)ᵀ A_T u^d`.
    pub fn divergence(&self, u: &[Vec3<T>]) -> Vec<T> {
        let mut out = vec![T::zero(); self.num_vertices()];
        self.divergence_into(u, &mut out);
        out
    }

    pub fn divergence_into(&self, u: &[Vec3<T>], out: &mut [T]) {
        assert_eq!(u.len(), self.num_triangles(), "divergence: field length");
        assert_eq!(out.len(), self.num_vertices(), "divergence: output length");
        out.iter_mut().for_each(|x| *x = T::zero());
        for (((tri, block), area), uj) in self
            .triangles
            .iter()
            .zip(&self.grad_blocks)
            .zip(&self.triangle_area)
            .zip(u)
        {
            for (a, &i) in tri.iter().enumerate() {
                let gtu = block[0][a] * uj[0] + block[1][a] * uj[1] + block[2][a] * uj[2];
                out[i] -= *area * gtu;
            }
        }
        for (x, a) in out.iter_mut().zip(&self.vertex_area) {
            *x /= *a;
        }
    }

    /// Stiffness matrix `S = Σ_d (G^d)ᵀ A_T G^d`, so that `-∇·∇ = A_V⁻¹ S`.
    pub fn stiffness(&self) -> CsrMatrix<T> {
        let mut triplets = Vec::with_capacity(9 * self.num_triangles());
        for ((tri, block), &area) in self.triangles.iter().zip(&self.grad_blocks).zip(&self.triangle_area) {
            for a in 0..3 {
                for b in 0..3 {
                    let v = area * (block[0][a] * block[0][b] + block[1][a] * block[1][b] + block[2][a] * block[2][b]);
                    triplets.push((tri[a], tri[b], v));
                }
            }
        }
        CsrMatrix::from_triplets(self.num_vertices(), triplets)
    }

    /// Fraction of `u` normal to its triangle, `|u·n| / |u|` (0 for zero vectors).
    pub fn normal_fraction(&self, j: usize, u: Vec3<T>) -> T {
        let len = norm(u);
        if len == T::zero() {
            T::zero()
        } else {
            dot(u, self.normals[j]).abs() / len
        }
    }
}

fn build_adjacency(h: usize, triangles: &[[usize; 3]]) -> (Vec<usize>, Vec<usize>, usize) {
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(3 * triangles.len());
    for tri in triangles {
        for a in 0..3 {
            let (i, j) = (tri[a], tri[(a + 1) % 3]);
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();
    let mut boundary = 0;
    let mut unique = Vec::with_capacity(edges.len() / 2 + 1);
    let mut k = 0;
    while k < edges.len() {
        let mut run = 1;
        while k + run < edges.len() && edges[k + run] == edges[k] {
            run += 1;
        }
        if run == 1 {
            boundary += 1;
        }
        unique.push(edges[k]);
        k += run;
    }
    let mut degree = vec![0usize; h + 1];
    for &(i, j) in &unique {
        degree[i] += 1;
        degree[j] += 1;
    }
    let mut offsets = vec![0usize; h + 1];
    for i in 0..h {
        offsets[i + 1] = offsets[i] + degree[i];
    }
    let mut fill = offsets.clone();
    let mut neighbors = vec![0usize; offsets[h]];
    for &(i, j) in &unique {
        neighbors[fill[i]] = j;
        fill[i] += 1;
        neighbors[fill[j]] = i;
        fill[j] += 1;
    }
    for i in 0..h {
        neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
    }
    (offsets, neighbors, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_right_triangle() -> Mesh<f64> {
        Mesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn right_triangle_areas() {
        let m = unit_right_triangle();
        assert_eq!(m.num_vertices(), 3);
        assert_eq!(m.num_triangles(), 1);
        assert_relative_eq!(m.triangle_areas()[0], 0.5);
        for a in m.vertex_areas() {
            assert_relative_eq!(*a, 1.0 / 6.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn gradient_of_third_hat_function() {
        let m = unit_right_triangle();
        let g = m.gradient(&[0.0, 0.0, 1.0]);
        assert_relative_eq!(g[0][0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(g[0][1], 1.0, epsilon = 1e-15);
        assert_relative_eq!(g[0][2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gradient_annihilates_constants() {
        let m = make_icosphere::<f64>(1, 1.0);
        let g = m.gradient(&vec![3.25; m.num_vertices()]);
        for v in g {
            assert!(norm(v) < 1e-12);
        }
    }

    #[test]
    fn gradient_of_linear_function_on_grid() {
        let m = make_flat_grid::<f64>(10, 10, 1.0, 1.0);
        let x: Vec<f64> = m.vertices().iter().map(|v| v[0]).collect();
        for g in m.gradient(&x) {
            assert!((g[0] - 1.0).abs() < 1e-12 && g[1].abs() < 1e-12 && g[2].abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_blocks_are_tangent() {
        let m = make_icosphere::<f64>(2, 1.5);
        for (block, n) in m.gradient_blocks().iter().zip(m.normals()) {
            for a in 0..3 {
                let col = block.map(|row| row[a]);
                assert!(dot(col, *n).abs() <= 1e-12 * norm(col));
            }
        }
    }

    #[test]
    fn divergence_of_zero_and_closed_mesh_flux() {
        let m = make_icosphere::<f64>(1, 1.0);
        let zero = m.divergence(&vec![[0.0; 3]; m.num_triangles()]);
        assert!(zero.iter().all(|x| *x == 0.0));

        let mut u = Vec::new();
        for (j, n) in m.normals().iter().enumerate() {
            // any tangent vector: project a fixed direction onto the face plane
            let w = [1.0 + j as f64 * 0.01, -0.5, 0.25];
            let c = dot(w, *n);
            u.push([w[0] - c * n[0], w[1] - c * n[1], w[2] - c * n[2]]);
        }
        let div = m.divergence(&u);
        assert!(m.mass(&div).abs() < 1e-12);
    }

    #[test]
    fn vertex_areas_partition_total() {
        let m = make_flat_grid::<f64>(2, 2, 2.0, 2.0);
        let sum: f64 = m.vertex_areas().iter().sum();
        assert_relative_eq!(sum, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn stiffness_matches_gradient_energy() {
        let m = make_icosphere::<f64>(1, 1.0);
        let p: Vec<f64> = (0..m.num_vertices()).map(|i| (i as f64 * 0.37).sin()).collect();
        let sp = m.stiffness().mul_vec(&p);
        let lhs: f64 = p.iter().zip(&sp).map(|(a, b)| a * b).sum();
        let g = m.gradient(&p);
        assert_relative_eq!(lhs, m.triangle_inner(&g, &g), max_relative = 1e-12);
    }

    #[test]
    fn repeated_vertex_face_is_degenerate() {
        let err = Mesh::<f64>::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 1]],
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::DegenerateTriangle { face: 0, .. }));
    }

    #[test]
    fn collinear_face_is_degenerate() {
        let err = Mesh::<f64>::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 3], [0, 1, 2]],
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::DegenerateTriangle { face: 1, .. }));
    }

    #[test]
    fn adjacency_on_single_quad() {
        let m = make_flat_grid::<f64>(1, 1, 1.0, 1.0);
        assert_eq!(m.num_edges(), 5);
        assert_eq!(m.boundary_edge_count(), 4);
        assert!(!m.is_closed());
        assert!(make_icosphere::<f64>(0, 1.0).is_closed());
    }
}
