//! Pressure, its material derivative, and the vortical/harmonic velocity split.

use super::{curl, extrapolate_band, gradient, hessian, laplacian, normal_derivative, poisson_dirichlet, BoundaryData};
use super::{Field, InteriorSampling, PoissonSolution};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::potential::LayerOperator;

/// `M_ab = ∂_a u_b` from a gradient field laid out as `c·3 + a`.
#[inline]
fn velocity_gradient(g: &Field, cell: usize) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            m[a][b] = g.get(cell, b * 3 + a);
        }
    }
    m
}

fn source_on(s: &InteriorSampling, f: impl Fn(usize) -> f64) -> Field {
    let mut out = Field::invalid(s.grid().n_cells(), 1);
    for &c in s.inside_cells() {
        out.set(c, 0, f(c));
    }
    extrapolate_band(s, &mut out);
    out
}

/// Solves `Δp = −tr((∇u)²)` with `p = 0` on the boundary.
pub fn pressure_solve(s: &InteriorSampling, u: &Field) -> Result<PoissonSolution> {
    check_vector(u)?;
    let g = gradient(s, u);
    let src = source_on(s, |c| {
        let m = velocity_gradient(&g, c);
        let mut tr = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                tr += m[a][b] * m[b][a];
            }
        }
        -tr
    });
    poisson_dirichlet(s, &src, BoundaryData::Zero)
}

#[derive(Debug, Clone)]
pub struct MaterialPressure {
    /// `D_t p` on the grid.
    pub field: Field,
    /// `∇_N D_t p` at each mesh vertex.
    pub normal_derivative: Vec<f64>,
}

/// Solves for `D_t p` with zero boundary data and source
/// `4 ∇_a u_c ∇_a∇_c p + 2 tr((∇u)³) − Δu·∇p`.
pub fn material_pressure_solve(s: &InteriorSampling, u: &Field, p: &Field) -> Result<MaterialPressure> {
    check_vector(u)?;
    let g = gradient(s, u);
    let hp = hessian(s, p)?;
    let gp = gradient(s, p);
    let lu = laplacian(s, u);
    let src = source_on(s, |c| {
        let m = velocity_gradient(&g, c);
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                p1 += m[a][b] * hp.get(c, a * 3 + b);
                for d in 0..3 {
                    p2 += m[a][b] * m[b][d] * m[d][a];
                }
            }
        }
        let p3 = -(0..3).map(|a| lu.get(c, a) * gp.get(c, a)).sum::<f64>();
        4.0 * p1 + 2.0 * p2 + p3
    });
    let sol = poisson_dirichlet(s, &src, BoundaryData::Zero)?;
    let zero = vec![0.0; s.mesh().n_vertices()];
    let normal = normal_derivative(s, &sol.field, &zero)?;
    Ok(MaterialPressure { field: sol.field, normal_derivative: normal })
}

#[derive(Debug, Clone)]
pub struct VelocitySplit {
    /// Zero-trace part solving `Δu₀ = −curl ω`.
    pub vortical: Field,
    /// Harmonic extension of the boundary velocity, evaluated on the inside
    /// cells of the even sub-lattice only.
    pub harmonic: Field,
    /// Discrete `‖u − u₀ − u₁‖ / ‖u‖` over the sub-lattice cells.
    pub residual: f64,
}

/// Decomposes `u` into a vortical part with zero trace and the harmonic extension
/// of its boundary values, computed with the layer operator of the same surface.
pub fn velocity_split(s: &InteriorSampling, layer: &LayerOperator, u: &Field) -> Result<VelocitySplit> {
    check_vector(u)?;
    if layer.mesh().n_vertices() != s.mesh().n_vertices() {
        return Err(Error::InvalidInput("layer operator and sampling use different meshes".into()));
    }
    let omega = curl(s, u)?;
    let curl_omega = curl(s, &omega)?;
    let mut parts = Vec::with_capacity(3);
    for c in 0..3 {
        let src = curl_omega.component(c).scaled(-1.0);
        parts.push(poisson_dirichlet(s, &src, BoundaryData::Zero)?.field);
    }
    let vortical = Field::stack(&parts);

    let trace = boundary_trace(s, u)?;
    let comps: Vec<Vec<f64>> = (0..3).map(|c| trace.iter().map(|v| v[c]).collect()).collect();
    let densities: Vec<Vec<f64>> = comps.iter().map(|psi| layer.density(psi)).collect::<Result<_>>()?;
    let refs: Vec<&[f64]> = densities.iter().map(|d| d.as_slice()).collect();
    let cells: Vec<usize> =
        s.inside_cells().iter().copied().filter(|&c| s.grid().global(c).iter().all(|g| g % 2 == 0)).collect();
    let points: Vec<Vec3> = cells.iter().map(|&c| s.grid().position(c)).collect();
    let values = layer.evaluate_densities(&points, &refs);
    let mut harmonic = Field::invalid(s.grid().n_cells(), 3);
    for (k, &cell) in cells.iter().enumerate() {
        harmonic.set_cell(cell, &[values[0][k], values[1][k], values[2][k]]);
    }

    let mut num = 0.0;
    let mut den = 0.0;
    for &c in &cells {
        for a in 0..3 {
            let r = u.get(c, a) - vortical.get(c, a) - harmonic.get(c, a);
            num += r * r;
            den += u.get(c, a).powi(2);
        }
    }
    let residual = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    Ok(VelocitySplit { vortical, harmonic, residual })
}

/// Vector field values at the mesh vertices by triquadratic interpolation.
pub(crate) fn boundary_trace(s: &InteriorSampling, u: &Field) -> Result<Vec<Vec3>> {
    s.mesh()
        .vertices()
        .iter()
        .enumerate()
        .map(|(v, x)| {
            s.interpolate_quadratic(u, x)
                .map(|r| Vec3::new(r[0], r[1], r[2]))
                .ok_or_else(|| Error::InvalidInput(format!("vertex {v} has no valid grid neighbourhood")))
        })
        .collect()
}

fn check_vector(u: &Field) -> Result<()> {
    if u.ncomp != 3 {
        return Err(Error::InvalidInput(format!("velocity must have 3 components, got {}", u.ncomp)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::build_sampling;
    use crate::geometry::shapes::icosphere;
    use crate::potential::assemble;

    #[test]
    fn rigid_rotation_pressure_and_taylor_margin() {
        let mesh = icosphere(4, 1.0).unwrap();
        let s = build_sampling(&mesh, 0.05).unwrap();
        let u = s.sample(3, |x| vec![-x.y, x.x, 0.0]);
        let p = pressure_solve(&s, &u).unwrap().field;
        let err = s
            .inside_cells()
            .iter()
            .map(|&c| (p.get(c, 0) - (s.grid().position(c).norm_squared() - 1.0) / 3.0).abs())
            .fold(0.0, f64::max);
        assert!(err < 5e-3, "{err}");
        let dn = normal_derivative(&s, &p, &vec![0.0; mesh.n_vertices()]).unwrap();
        let margin = -dn.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((margin + 2.0 / 3.0).abs() < 0.05 * 2.0 / 3.0, "{margin}");
    }

    #[test]
    fn strain_pressure_is_positive_inside() {
        let mesh = icosphere(4, 1.0).unwrap();
        let s = build_sampling(&mesh, 0.05).unwrap();
        let u = s.sample(3, |x| vec![x.x, -x.y, 0.0]);
        let p = pressure_solve(&s, &u).unwrap().field;
        for &c in s.inside_cells() {
            let exact = (1.0 - s.grid().position(c).norm_squared()) / 3.0;
            assert!((p.get(c, 0) - exact).abs() < 5e-3);
        }
        let dn = normal_derivative(&s, &p, &vec![0.0; mesh.n_vertices()]).unwrap();
        let margin = -dn.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((margin - 2.0 / 3.0).abs() < 0.05 * 2.0 / 3.0, "{margin}");
    }

    #[test]
    fn split_of_shear_flow_reconstructs_velocity() {
        let mesh = icosphere(3, 1.0).unwrap();
        let s = build_sampling(&mesh, 0.1).unwrap();
        let layer = assemble(&mesh).unwrap();
        let u = s.sample(3, |x| vec![x.y * x.y, 0.0, x.x]);
        let split = velocity_split(&s, &layer, &u).unwrap();
        assert!(split.residual < 0.03, "{}", split.residual);
        for c in s.deep_cells(1) {
            let r2 = s.grid().position(c).norm_squared();
            assert!((split.vortical.get(c, 0) - (r2 - 1.0) / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn material_pressure_vanishes_for_zero_flow() {
        let mesh = icosphere(3, 1.0).unwrap();
        let s = build_sampling(&mesh, 0.1).unwrap();
        let u = Field::zeros_on(&s, 3);
        let p = pressure_solve(&s, &u).unwrap().field;
        let dtp = material_pressure_solve(&s, &u, &p).unwrap();
        assert!(dtp.normal_derivative.iter().all(|&v| v == 0.0));
    }
}
