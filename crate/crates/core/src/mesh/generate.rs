use std::collections::HashMap;

use super::Mesh;
use crate::error::MeshError;
use crate::scalar::{norm, Scalar, Vec3};

const ICOSAHEDRON_FACES: [[usize; 3]; 20] = [
    [0, 11, 5],
    [0, 5, 1],
    [0, 1, 7],
    [0, 7, 10],
    [0, 10, 11],
    [1, 5, 9],
    [5, 11, 4],
    [11, 10, 2],
    [10, 7, 6],
    [7, 1, 8],
    [3, 9, 4],
    [3, 4, 2],
    [3, 2, 6],
    [3, 6, 8],
    [3, 8, 9],
    [4, 9, 5],
    [2, 4, 11],
    [6, 2, 10],
    [8, 6, 7],
    [9, 8, 1],
];

fn scaled<T: Scalar>(v: Vec3<T>, radius: T) -> Vec3<T> {
    let s = radius / norm(v);
    [v[0] * s, v[1] * s, v[2] * s]
}

/// Subdivided icosahedron projected onto the sphere of the given radius.
///
/// Each subdivision splits every face into four, so the result has
/// `20·4^subdivisions` faces and `10·4^subdivisions + 2` vertices.
pub fn make_icosphere<T: Scalar>(subdivisions: u32, radius: T) -> Mesh<T> {
    let phi = (T::one() + T::lit(5.0).sqrt()) / T::lit(2.0);
    let (o, z) = (T::one(), T::zero());
    let raw = [
        [-o, phi, z],
        [o, phi, z],
        [-o, -phi, z],
        [o, -phi, z],
        [z, -o, phi],
        [z, o, phi],
        [z, -o, -phi],
        [z, o, -phi],
        [phi, z, -o],
        [phi, z, o],
        [-phi, z, -o],
        [-phi, z, o],
    ];
    let mut vertices: Vec<Vec3<T>> = raw.iter().map(|v| scaled(*v, radius)).collect();
    let mut faces: Vec<[usize; 3]> = ICOSAHEDRON_FACES.to_vec();

    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec3<T>>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let (va, vb) = (vertices[a], vertices[b]);
                let m = [va[0] + vb[0], va[1] + vb[1], va[2] + vb[2]];
                vertices.push(scaled(m, radius));
                vertices.len() - 1
            })
        };
        for f in &faces {
            let ab = mid(f[0], f[1], &mut vertices);
            let bc = mid(f[1], f[2], &mut vertices);
            let ca = mid(f[2], f[0], &mut vertices);
            next.push([f[0], ab, ca]);
            next.push([f[1], bc, ab]);
            next.push([f[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    Mesh::new(vertices, faces).expect("icosphere faces are non-degenerate")
}

/// Rectangle `[0, width] × [0, height]` in the plane `z = 0`, split into
/// `nx × ny` cells of two right triangles each.
///
/// Vertex `(i, j)` (column `i`, row `j`) has index `j·(nx+1) + i`.
pub fn make_flat_grid<T: Scalar>(nx: usize, ny: usize, width: T, height: T) -> Mesh<T> {
    let (vertices, faces) = grid_parts(nx, ny, width, height);
    Mesh::new(vertices, faces).expect("grid faces are non-degenerate")
}

/// Flat grid with the faces whose three vertices all satisfy `masked` removed.
///
/// Vertices left without faces are dropped and the rest renumbered in order.
pub fn make_punctured_grid<T: Scalar>(
    nx: usize,
    ny: usize,
    width: T,
    height: T,
    masked: impl Fn(&Vec3<T>) -> bool,
) -> Result<Mesh<T>, MeshError> {
    let (vertices, faces) = grid_parts(nx, ny, width, height);
    let inside: Vec<bool> = vertices.iter().map(&masked).collect();
    let kept: Vec<[usize; 3]> = faces
        .into_iter()
        .filter(|f| !(inside[f[0]] && inside[f[1]] && inside[f[2]]))
        .collect();
    let mut used = vec![false; vertices.len()];
    for f in &kept {
        for &i in f {
            used[i] = true;
        }
    }
    let mut remap = vec![usize::MAX; vertices.len()];
    let mut compact = Vec::new();
    for (i, v) in vertices.iter().enumerate() {
        if used[i] {
            remap[i] = compact.len();
            compact.push(*v);
        }
    }
    let faces = kept
        .iter()
        .map(|f| [remap[f[0]], remap[f[1]], remap[f[2]]])
        .collect();
    Mesh::new(compact, faces)
}

fn grid_parts<T: Scalar>(nx: usize, ny: usize, width: T, height: T) -> (Vec<Vec3<T>>, Vec<[usize; 3]>) {
    assert!(nx >= 1 && ny >= 1, "grid needs at least one cell per direction");
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let y = height * T::from_count(j) / T::from_count(ny);
        for i in 0..=nx {
            let x = width * T::from_count(i) / T::from_count(nx);
            vertices.push([x, y, T::zero()]);
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    (vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::dot;
    use approx::assert_relative_eq;

    #[test]
    fn icosahedron_counts_and_area() {
        let m = make_icosphere::<f64>(0, 1.0);
        assert_eq!((m.num_vertices(), m.num_triangles()), (12, 20));
        // edge length of the icosahedron inscribed in the unit sphere
        let a = 4.0 / (10.0 + 2.0 * 5f64.sqrt()).sqrt();
        assert_relative_eq!(m.total_area(), 5.0 * 3f64.sqrt() * a * a, epsilon = 1e-9);
    }

    #[test]
    fn subdivided_counts_follow_euler() {
        for k in 0..4 {
            let m = make_icosphere::<f64>(k, 1.0);
            let f = 20 * 4usize.pow(k);
            assert_eq!(m.num_triangles(), f);
            assert_eq!(m.num_vertices(), f / 2 + 2);
            assert!(m.is_closed());
        }
        assert_eq!(make_icosphere::<f64>(3, 1.0).num_vertices(), 642);
    }

    #[test]
    fn icosphere_vertices_on_sphere_and_outward() {
        let m = make_icosphere::<f64>(2, 2.0);
        for v in m.vertices() {
            assert_relative_eq!(norm(*v), 2.0, epsilon = 1e-12);
        }
        for (tri, n) in m.triangles().iter().zip(m.normals()) {
            assert!(dot(m.vertices()[tri[0]], *n) > 0.0);
        }
        let area = m.total_area();
        let exact = 16.0 * std::f64::consts::PI;
        assert!(area < exact && area > 0.98 * exact, "area {area}");
    }

    #[test]
    fn grid_counts() {
        let m = make_flat_grid::<f64>(1, 1, 1.0, 1.0);
        assert_eq!((m.num_vertices(), m.num_triangles()), (4, 2));
        assert_relative_eq!(m.total_area(), 1.0);
        let m = make_flat_grid::<f64>(10, 10, 1.0, 1.0);
        assert_eq!((m.num_vertices(), m.num_triangles()), (121, 200));
        for n in m.normals() {
            assert_relative_eq!(n[2], 1.0);
        }
    }

    #[test]
    fn puncture_removes_hole_faces() {
        let m = make_punctured_grid::<f64>(10, 10, 1.0, 1.0, |v| {
            (0.35..=0.65).contains(&v[0]) && (0.35..=0.65).contains(&v[1])
        })
        .unwrap();
        // 3x3 masked vertices -> 2x2 cells removed, only the center vertex dropped
        assert_eq!(m.num_triangles(), 200 - 8);
        assert_eq!(m.num_vertices(), 121 - 1);
        assert_relative_eq!(m.total_area(), 1.0 - 0.04, epsilon = 1e-12);
    }
}
