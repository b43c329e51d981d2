//! Closed triangulated boundary surfaces and their extrinsic geometry.
//!
//! A [`SurfaceMesh`] is validated on construction: it must be a connected,
//! closed, orientable 2-manifold of sphere topology with positive enclosed
//! volume. Vertex normals use Max's weighting, which is exact for vertices
//! sampled from a sphere.

mod curvature;
mod locator;
pub mod off;
mod reach;
pub mod shapes;

pub use curvature::{
    boundary_integral, project_tangential, second_fundamental_form, tangential_gradient,
    CurvatureData, MIN_CURVATURE_VERTICES,
};
pub use locator::{closest_point_on_triangle, ClosestPoint, MeshLocator};
pub use reach::{
    exterior_sphere_radius, geometry_bounds, injectivity_radius, injectivity_radius_with,
    GeometryBounds,
};

use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Relative area below which a face is considered degenerate.
const DEGENERATE_AREA_FRACTION: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    vertex_normals: Vec<Vec3>,
    vertex_areas: Vec<f64>,
    face_normals: Vec<Vec3>,
    face_areas: Vec<f64>,
    one_rings: Vec<Vec<usize>>,
    vertex_faces: Vec<Vec<usize>>,
}

/// Validates a triangle soup and returns an outward-oriented closed mesh.
pub fn build_surface(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<SurfaceMesh> {
    let n = vertices.len();
    if n < 4 {
        return Err(Error::InvalidInput(format!(
            "a closed surface needs at least 4 vertices, got {n}"
        )));
    }
    if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
        return Err(Error::InvalidInput("non-finite vertex coordinate".into()));
    }
    for (fi, f) in faces.iter().enumerate() {
        if f.iter().any(|&i| i >= n) {
            return Err(Error::InvalidInput(format!("face {fi} references a missing vertex")));
        }
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            return Err(Error::NonManifold(format!("face {fi} repeats a vertex")));
        }
    }
    let mut faces = faces;

    // Edge incidence.
    let mut edges: HashMap<(usize, usize), Vec<usize>> = HashMap::with_capacity(faces.len() * 2);
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            edges.entry((a.min(b), a.max(b))).or_default().push(fi);
        }
    }
    if let Some((e, inc)) = edges.iter().find(|(_, inc)| inc.len() != 2) {
        return Err(Error::NonManifold(format!(
            "edge ({}, {}) has {} incident faces",
            e.0,
            e.1,
            inc.len()
        )));
    }
    let mut seen = HashMap::with_capacity(faces.len());
    for (fi, f) in faces.iter().enumerate() {
        let mut key = *f;
        key.sort_unstable();
        if let Some(prev) = seen.insert(key, fi) {
            return Err(Error::NonManifold(format!("faces {prev} and {fi} coincide")));
        }
    }

    let mut vertex_faces = vec![Vec::new(); n];
    for (fi, f) in faces.iter().enumerate() {
        for &v in f {
            vertex_faces[v].push(fi);
        }
    }
    if let Some(v) = vertex_faces.iter().position(|fs| fs.is_empty()) {
        return Err(Error::NonManifold(format!("vertex {v} is not used by any face")));
    }
    for (v, fs) in vertex_faces.iter().enumerate() {
        if !link_is_single_cycle(v, fs, &faces) {
            return Err(Error::NonManifold(format!("vertex {v} has a pinched neighborhood")));
        }
    }

    // Consistent orientation by breadth-first propagation across edges.
    let face_adjacency = |fi: usize, faces: &[[usize; 3]]| -> [(usize, usize, usize); 3] {
        let f = faces[fi];
        let mut out = [(0, 0, 0); 3];
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let inc = &edges[&(a.min(b), a.max(b))];
            let other = if inc[0] == fi { inc[1] } else { inc[0] };
            out[k] = (other, a, b);
        }
        out
    };
    let mut visited = vec![false; faces.len()];
    let mut queue = std::collections::VecDeque::new();
    visited[0] = true;
    queue.push_back(0usize);
    let mut reached = 1usize;
    while let Some(fi) = queue.pop_front() {
        for (other, a, b) in face_adjacency(fi, &faces) {
            // A consistent neighbour traverses the shared edge as b -> a.
            let g = faces[other];
            let same_direction = (0..3).any(|k| g[k] == a && g[(k + 1) % 3] == b);
            if visited[other] {
                if same_direction {
                    return Err(Error::InvertedOrientation(
                        "surface is not orientable".to_string(),
                    ));
                }
                continue;
            }
            if same_direction {
                faces[other].swap(1, 2);
            }
            visited[other] = true;
            reached += 1;
            queue.push_back(other);
        }
    }
    if reached != faces.len() {
        return Err(Error::NonManifold(format!(
            "surface has more than one connected component ({reached} of {} faces reachable)",
            faces.len()
        )));
    }
    let euler = n as i64 - edges.len() as i64 + faces.len() as i64;
    if euler != 2 {
        return Err(Error::NonManifold(format!(
            "Euler characteristic {euler}, expected 2 for a sphere-like boundary"
        )));
    }

    let raw_areas: Vec<f64> = faces.iter().map(|f| tri_area(&vertices, f)).collect();
    let mean_area = raw_areas.iter().sum::<f64>() / raw_areas.len() as f64;
    let threshold = DEGENERATE_AREA_FRACTION * mean_area;
    if let Some((fi, &a)) = raw_areas
        .iter()
        .enumerate()
        .find(|(_, &a)| !(a >= threshold) || a == 0.0)
    {
        return Err(Error::DegenerateFace { face: fi, area: a, threshold });
    }

    if signed_volume_of(&vertices, &faces) < 0.0 {
        for f in faces.iter_mut() {
            f.swap(1, 2);
        }
    }
    let volume = signed_volume_of(&vertices, &faces);
    if !(volume > 0.0) {
        return Err(Error::InvertedOrientation(format!(
            "enclosed volume {volume:e} is not positive"
        )));
    }

    Ok(assemble_mesh(vertices, faces, vertex_faces, raw_areas))
}

fn link_is_single_cycle(v: usize, incident: &[usize], faces: &[[usize; 3]]) -> bool {
    // Each incident face contributes the edge opposite v; those edges must
    // chain into one closed loop.
    let link: Vec<(usize, usize)> = incident
        .iter()
        .map(|&fi| {
            let f = faces[fi];
            let k = f.iter().position(|&x| x == v).unwrap();
            (f[(k + 1) % 3], f[(k + 2) % 3])
        })
        .collect();
    let mut used = vec![false; link.len()];
    used[0] = true;
    let start = link[0].0;
    let mut cur = link[0].1;
    let mut steps = 1;
    while cur != start {
        let next = (0..link.len()).find(|&i| !used[i] && (link[i].0 == cur || link[i].1 == cur));
        match next {
            Some(i) => {
                used[i] = true;
                cur = if link[i].0 == cur { link[i].1 } else { link[i].0 };
                steps += 1;
            }
            None => return false,
        }
    }
    steps == link.len()
}

fn tri_area(vertices: &[Vec3], f: &[usize; 3]) -> f64 {
    let (a, b, c) = (vertices[f[0]], vertices[f[1]], vertices[f[2]]);
    0.5 * (b - a).cross(&(c - a)).norm()
}

fn signed_volume_of(vertices: &[Vec3], faces: &[[usize; 3]]) -> f64 {
    let c = vertices.iter().fold(Vec3::zeros(), |acc, v| acc + v) / vertices.len() as f64;
    faces
        .iter()
        .map(|f| {
            let (a, b, d) = (vertices[f[0]] - c, vertices[f[1]] - c, vertices[f[2]] - c);
            a.dot(&b.cross(&d))
        })
        .sum::<f64>()
        / 6.0
}

fn assemble_mesh(
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    vertex_faces: Vec<Vec<usize>>,
    face_areas: Vec<f64>,
) -> SurfaceMesh {
    let n = vertices.len();
    let face_normals: Vec<Vec3> = faces
        .iter()
        .map(|f| {
            let (a, b, c) = (vertices[f[0]], vertices[f[1]], vertices[f[2]]);
            (b - a).cross(&(c - a)).normalize()
        })
        .collect();

    let mut vertex_normals = vec![Vec3::zeros(); n];
    let mut vertex_areas = vec![0.0; n];
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            let v = f[k];
            let e1 = vertices[f[(k + 1) % 3]] - vertices[v];
            let e2 = vertices[f[(k + 2) % 3]] - vertices[v];
            vertex_normals[v] += e1.cross(&e2) / (e1.norm_squared() * e2.norm_squared());
            vertex_areas[v] += face_areas[fi] / 3.0;
        }
    }
    for nrm in vertex_normals.iter_mut() {
        *nrm = nrm.normalize();
    }

    let mut one_rings = vec![Vec::new(); n];
    for f in &faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            one_rings[a].push(b);
            one_rings[b].push(a);
        }
    }
    for ring in one_rings.iter_mut() {
        ring.sort_unstable();
        ring.dedup();
    }

    SurfaceMesh {
        vertices,
        faces,
        vertex_normals,
        vertex_areas,
        face_normals,
        face_areas,
        one_rings,
        vertex_faces,
    }
}

impl SurfaceMesh {
    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_normals(&self) -> &[Vec3] {
        &self.vertex_normals
    }

    pub fn vertex_areas(&self) -> &[f64] {
        &self.vertex_areas
    }

    pub fn face_normals(&self) -> &[Vec3] {
        &self.face_normals
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn one_ring(&self, v: usize) -> &[usize] {
        &self.one_rings[v]
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    /// Vertices reachable in at most two edges, excluding `v` itself.
    pub fn two_ring(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.one_rings[v].clone();
        for &w in &self.one_rings[v] {
            out.extend_from_slice(&self.one_rings[w]);
        }
        out.sort_unstable();
        out.dedup();
        out.retain(|&w| w != v);
        out
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas.iter().sum()
    }

    /// Enclosed volume from the divergence theorem, evaluated about the vertex centroid.
    pub fn signed_volume(&self) -> f64 {
        signed_volume_of(&self.vertices, &self.faces)
    }

    pub fn centroid(&self) -> Vec3 {
        self.vertices.iter().fold(Vec3::zeros(), |a, v| a + v) / self.vertices.len() as f64
    }

    /// Mean length of the edges incident to `v`.
    pub fn local_spacing(&self, v: usize) -> f64 {
        let ring = &self.one_rings[v];
        ring.iter().map(|&w| (self.vertices[w] - self.vertices[v]).norm()).sum::<f64>()
            / ring.len() as f64
    }

    pub fn mean_edge_length(&self) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for (v, ring) in self.one_rings.iter().enumerate() {
            for &w in ring.iter().filter(|&&w| w > v) {
                total += (self.vertices[w] - self.vertices[v]).norm();
                count += 1;
            }
        }
        total / count as f64
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Normalized triangle quality `4√3·A / (a² + b² + c²)`, equal to 1 for equilateral faces.
    pub fn face_aspect(&self, fi: usize) -> f64 {
        let f = self.faces[fi];
        let (a, b, c) = (self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]);
        let s = (b - a).norm_squared() + (c - b).norm_squared() + (a - c).norm_squared();
        4.0 * 3f64.sqrt() * self.face_areas[fi] / s
    }

    pub fn min_aspect(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_aspect(f)).fold(f64::INFINITY, f64::min)
    }

    /// Rebuilds the mesh with the same connectivity and new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<SurfaceMesh> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::InvalidInput("vertex count changed".into()));
        }
        build_surface(vertices, self.faces.clone())
    }

    pub fn scaled(&self, factor: f64) -> Result<SurfaceMesh> {
        self.with_vertices(self.vertices.iter().map(|v| v * factor).collect())
    }

    /// Applies `x -> rotation * x + translation` to every vertex.
    pub fn transformed(&self, rotation: &Mat3, translation: &Vec3) -> Result<SurfaceMesh> {
        self.with_vertices(self.vertices.iter().map(|v| rotation * v + translation).collect())
    }

    /// Barycentric interpolation of per-vertex values on face `face`.
    pub fn interpolate(&self, values: &[f64], face: usize, bary: &[f64; 3]) -> f64 {
        let f = self.faces[face];
        bary[0] * values[f[0]] + bary[1] * values[f[1]] + bary[2] * values[f[2]]
    }

    /// Normalized barycentric blend of vertex normals on a face.
    pub fn interpolated_normal(&self, face: usize, bary: &[f64; 3]) -> Vec3 {
        let f = self.faces[face];
        let n = self.vertex_normals[f[0]] * bary[0]
            + self.vertex_normals[f[1]] * bary[1]
            + self.vertex_normals[f[2]] * bary[2];
        let len = n.norm();
        if len > 1e-12 {
            n / len
        } else {
            self.face_normals[face]
        }
    }
}
