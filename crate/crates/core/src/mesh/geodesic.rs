//! Vertex-to-vertex distances on a mesh.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::Mesh;
use crate::scalar::{dot, norm, sub, Scalar};

/// How distances between vertices are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    /// Shortest path along mesh edges (vertex pairs sharing a triangle).
    #[default]
    Graph,
    /// Great-circle distance; only meaningful for meshes of a centered sphere.
    Sphere,
    /// Straight-line distance in the embedding; equals the geodesic on convex flat domains.
    Euclidean,
}

struct Node<T> {
    dist: T,
    index: usize,
}

impl<T: Scalar> PartialEq for Node<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Node<T> {}

impl<T: Scalar> PartialOrd for Node<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Node<T> {
    // min-heap on distance, ties broken by index for a deterministic pop order
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// Dijkstra over the mesh 1-skeleton with Euclidean edge lengths.
///
/// Vertices in other connected components get `+∞`.
pub fn geodesic_distances<T: Scalar>(mesh: &Mesh<T>, source: usize) -> Vec<T> {
    let h = mesh.num_vertices();
    assert!(source < h, "source vertex {source} out of range");
    let verts = mesh.vertices();
    let mut dist = vec![T::infinity(); h];
    let mut done = vec![false; h];
    let mut heap = BinaryHeap::new();
    dist[source] = T::zero();
    heap.push(Node {
        dist: T::zero(),
        index: source,
    });
    while let Some(Node { dist: d, index: i }) = heap.pop() {
        if done[i] {
            continue;
        }
        done[i] = true;
        for &j in mesh.neighbors(i) {
            if done[j] {
                continue;
            }
            let cand = d + norm(sub(verts[j], verts[i]));
            if cand < dist[j] {
                dist[j] = cand;
                heap.push(Node { dist: cand, index: j });
            }
        }
    }
    dist
}

/// Great-circle distances `r·arccos(x̂_s · x̂_i)` with `r = |x_s|`.
pub fn sphere_distances<T: Scalar>(mesh: &Mesh<T>, source: usize) -> Vec<T> {
    let verts = mesh.vertices();
    let s = verts[source];
    let radius = norm(s);
    verts
        .iter()
        .map(|v| {
            let c = dot(s, *v) / (radius * norm(*v));
            radius * c.max(-T::one()).min(T::one()).acos()
        })
        .collect()
}

pub fn distances_from<T: Scalar>(mesh: &Mesh<T>, source: usize, metric: DistanceMetric) -> Vec<T> {
    match metric {
        DistanceMetric::Graph => geodesic_distances(mesh, source),
        DistanceMetric::Sphere => sphere_distances(mesh, source),
        DistanceMetric::Euclidean => {
            let s = mesh.vertices()[source];
            mesh.vertices().iter().map(|v| norm(sub(*v, s))).collect()
        }
    }
}
