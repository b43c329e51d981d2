use rayon::prelude::*;

use super::curvature::{second_fundamental_form, CurvatureData};
use super::SurfaceMesh;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryBounds {
    pub iota0: f64,
    pub r_exterior: f64,
    pub theta_sup: f64,
    /// `theta_sup + 1/iota0`.
    pub k_geom: f64,
}

/// Normal injectivity radius estimate, clamped to `cap`.
pub fn injectivity_radius(mesh: &SurfaceMesh, cap: f64) -> Result<f64> {
    let curv = second_fundamental_form(mesh)?;
    injectivity_radius_with(mesh, &curv, cap)
}

/// Same as [`injectivity_radius`] with precomputed curvature.
pub fn injectivity_radius_with(mesh: &SurfaceMesh, curv: &CurvatureData, cap: f64) -> Result<f64> {
    if !(cap > 0.0) {
        return Err(Error::InvalidInput(format!("cap must be positive, got {cap}")));
    }
    let x = mesh.vertices();
    let n = mesh.vertex_normals();
    let per_vertex: Vec<f64> = (0..mesh.n_vertices())
        .into_par_iter()
        .map(|i| {
            let kmax = curv.max_abs_curvature(i);
            let mut best = if kmax > 0.0 { 1.0 / kmax } else { f64::INFINITY };
            let mut near = mesh.two_ring(i);
            near.push(i);
            near.sort_unstable();
            for (j, y) in x.iter().enumerate() {
                if near.binary_search(&j).is_ok() {
                    continue;
                }
                let d = x[i] - y;
                let normal_gap = d.dot(&n[i]).abs();
                if normal_gap > 0.0 {
                    best = best.min(d.norm_squared() / (2.0 * normal_gap));
                }
            }
            best
        })
        .collect();
    Ok(per_vertex.into_iter().fold(cap, f64::min))
}

/// Largest radius `r ≤ r_max` such that every outward tangent ball of radius `r`
/// contains no other mesh vertex.
pub fn exterior_sphere_radius(mesh: &SurfaceMesh, r_max: f64) -> f64 {
    let x = mesh.vertices();
    let n = mesh.vertex_normals();
    // For each vertex the emptiness test fails exactly when r exceeds
    // |y − x|² / (2⟨y − x, N⟩) for some y on the outward side.
    let per_vertex: Vec<f64> = (0..mesh.n_vertices())
        .into_par_iter()
        .map(|i| {
            let mut best = f64::INFINITY;
            for (j, y) in x.iter().enumerate() {
                if j == i {
                    continue;
                }
                let d = y - x[i];
                let outward = d.dot(&n[i]);
                if outward > 0.0 {
                    best = best.min(d.norm_squared() / (2.0 * outward) * (1.0 + 1e-12));
                }
            }
            best
        })
        .collect();
    per_vertex.into_iter().fold(r_max, f64::min)
}

pub fn geometry_bounds(mesh: &SurfaceMesh, cap: f64) -> Result<GeometryBounds> {
    let curv = second_fundamental_form(mesh)?;
    let iota0 = injectivity_radius_with(mesh, &curv, cap)?;
    let r_exterior = exterior_sphere_radius(mesh, cap);
    Ok(GeometryBounds { iota0, r_exterior, theta_sup: curv.theta_sup, k_geom: curv.theta_sup + 1.0 / iota0 })
}
