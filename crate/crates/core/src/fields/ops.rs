//! Finite-difference operators on inside cells with band extrapolation.

use rayon::prelude::*;

use super::{Field, InteriorSampling};
use crate::error::{Error, Result};

/// Fills band cells from the least-squares stencils over inside cells.
pub fn extrapolate_band(s: &InteriorSampling, field: &mut Field) {
    let nc = field.ncomp;
    let values: Vec<Vec<f64>> = (0..s.band_cells().len())
        .into_par_iter()
        .map(|k| {
            let mut v = vec![0.0; nc];
            for &(cell, w) in s.stencil(k) {
                for (c, out) in v.iter_mut().enumerate() {
                    *out += w * field.get(cell, c);
                }
            }
            v
        })
        .collect();
    for (k, v) in values.into_iter().enumerate() {
        field.set_cell(s.band_cells()[k], &v);
    }
}

/// `∂_axis` of component `c` at an inside cell from inside neighbours only:
/// centred, else one-sided second order, else one-sided first order. Cells
/// with no inside neighbour along the axis fall back to extrapolated band values.
fn partial(s: &InteriorSampling, f: &Field, cell: usize, axis: usize, c: usize) -> f64 {
    let g = s.grid();
    let h = g.h;
    let at = |off: i64| g.neighbor(cell, axis, off).filter(|&n| s.is_inside(n)).map(|n| f.get(n, c));
    let f0 = f.get(cell, c);
    match (at(-1), at(1)) {
        (Some(m), Some(p)) => (p - m) / (2.0 * h),
        (None, Some(p)) => match at(2) {
            Some(p2) => (-3.0 * f0 + 4.0 * p - p2) / (2.0 * h),
            None => (p - f0) / h,
        },
        (Some(m), None) => match at(-2) {
            Some(m2) => (3.0 * f0 - 4.0 * m + m2) / (2.0 * h),
            None => (f0 - m) / h,
        },
        (None, None) => {
            let band = |off: i64| g.neighbor(cell, axis, off).filter(|&n| s.is_valid(n)).map(|n| f.get(n, c));
            match (band(-1), band(1)) {
                (Some(m), Some(p)) => (p - m) / (2.0 * h),
                (Some(m), None) => (f0 - m) / h,
                (None, Some(p)) => (p - f0) / h,
                (None, None) => 0.0,
            }
        }
    }
}

fn map_inside(s: &InteriorSampling, ncomp: usize, f: impl Fn(usize, &mut [f64]) + Sync) -> Field {
    let rows: Vec<Vec<f64>> = s
        .inside_cells()
        .par_iter()
        .map(|&cell| {
            let mut v = vec![0.0; ncomp];
            f(cell, &mut v);
            v
        })
        .collect();
    let mut out = Field::invalid(s.grid().n_cells(), ncomp);
    for (&cell, v) in s.inside_cells().iter().zip(rows) {
        out.set_cell(cell, &v);
    }
    extrapolate_band(s, &mut out);
    out
}

/// Gradient of every component; entry `c·3 + a` holds `∂_a f_c`.
pub fn gradient(s: &InteriorSampling, f: &Field) -> Field {
    let nc = f.ncomp;
    map_inside(s, nc * 3, |cell, out| {
        for c in 0..nc {
            for a in 0..3 {
                out[c * 3 + a] = partial(s, f, cell, a, c);
            }
        }
    })
}

pub fn divergence(s: &InteriorSampling, u: &Field) -> Result<Field> {
    check_ncomp(u, 3)?;
    Ok(map_inside(s, 1, |cell, out| {
        out[0] = (0..3).map(|a| partial(s, u, cell, a, a)).sum();
    }))
}

pub fn curl(s: &InteriorSampling, u: &Field) -> Result<Field> {
    check_ncomp(u, 3)?;
    Ok(map_inside(s, 3, |cell, out| {
        let d = |a, c| partial(s, u, cell, a, c);
        out[0] = d(1, 2) - d(2, 1);
        out[1] = d(2, 0) - d(0, 2);
        out[2] = d(0, 1) - d(1, 0);
    }))
}

/// Symmetrized Hessian of a scalar field, row-major 3×3.
pub fn hessian(s: &InteriorSampling, f: &Field) -> Result<Field> {
    check_ncomp(f, 1)?;
    let g = gradient(s, f);
    let mut hess = gradient(s, &g);
    for cell in 0..s.grid().n_cells() {
        if !s.is_valid(cell) {
            continue;
        }
        for a in 0..3 {
            for b in (a + 1)..3 {
                let m = 0.5 * (hess.get(cell, a * 3 + b) + hess.get(cell, b * 3 + a));
                hess.set(cell, a * 3 + b, m);
                hess.set(cell, b * 3 + a, m);
            }
        }
    }
    Ok(hess)
}

/// Componentwise Laplacian as the trace of the repeated gradient.
pub fn laplacian(s: &InteriorSampling, f: &Field) -> Field {
    let nc = f.ncomp;
    let gg = gradient(s, &gradient(s, f));
    let mut out = Field::invalid(s.grid().n_cells(), nc);
    for cell in 0..s.grid().n_cells() {
        if !s.is_valid(cell) {
            continue;
        }
        for c in 0..nc {
            let v = (0..3).map(|a| gg.get(cell, (c * 3 + a) * 3 + a)).sum();
            out.set(cell, c, v);
        }
    }
    out
}

/// Outward normal derivative of a scalar grid field at each mesh vertex, from the
/// boundary value and triquadratic samples at depths `h` and `2h`.
pub fn normal_derivative(s: &InteriorSampling, f: &Field, boundary: &[f64]) -> Result<Vec<f64>> {
    check_ncomp(f, 1)?;
    let mesh = s.mesh();
    if boundary.len() != mesh.n_vertices() {
        return Err(Error::InvalidInput(format!(
            "expected {} boundary values, got {}",
            mesh.n_vertices(),
            boundary.len()
        )));
    }
    let h = s.h();
    mesh.vertices()
        .par_iter()
        .zip(mesh.vertex_normals())
        .zip(boundary)
        .enumerate()
        .map(|(v, ((x, n), &f0))| {
            let sample = |depth: f64| {
                s.interpolate_quadratic(f, &(x - n * depth))
                    .map(|r| r[0])
                    .ok_or_else(|| Error::InvalidInput(format!("vertex {v} has no valid grid neighbourhood")))
            };
            let f1 = sample(h)?;
            let f2 = sample(2.0 * h)?;
            Ok((3.0 * f0 - 4.0 * f1 + f2) / (2.0 * h))
        })
        .collect()
}

fn check_ncomp(f: &Field, n: usize) -> Result<()> {
    if f.ncomp != n {
        return Err(Error::InvalidInput(format!("expected a {n}-component field, got {}", f.ncomp)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::build_sampling;
    use crate::geometry::shapes::icosphere;

    fn ball(h: f64) -> InteriorSampling {
        build_sampling(&icosphere(3, 1.0).unwrap(), h).unwrap()
    }

    #[test]
    fn rigid_rotation_is_solenoidal_with_constant_curl() {
        let s = ball(0.1);
        let u = s.sample(3, |x| vec![-x.y, x.x, 0.0]);
        let div = divergence(&s, &u).unwrap();
        let w = curl(&s, &u).unwrap();
        for &c in s.inside_cells().iter().chain(s.band_cells()) {
            assert!(div.get(c, 0).abs() < 1e-12);
            assert!((w.vec3(c) - crate::geometry::Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_quadratic_is_exact_on_interior_cells() {
        let s = ball(0.1);
        let q = s.sample(1, |x| vec![x.norm_squared()]);
        let g = gradient(&s, &q);
        for c in s.deep_cells(1) {
            let x = s.grid().position(c);
            assert!((g.vec3(c) - 2.0 * x).norm() < 1e-10);
        }
        // One-sided second-order differences are exact for quadratics too.
        for &c in s.inside_cells() {
            let x = s.grid().position(c);
            assert!((g.vec3(c) - 2.0 * x).norm() < 0.1 * 0.1 * 4.0, "cell {c}");
        }
    }

    #[test]
    fn hessian_and_laplacian_of_quadratic() {
        let s = ball(0.1);
        let q = s.sample(1, |x| vec![x.x * x.y + 0.5 * x.z * x.z]);
        let h = hessian(&s, &q).unwrap();
        let l = laplacian(&s, &q);
        for c in s.deep_cells(2) {
            assert!((h.get(c, 1) - 1.0).abs() < 1e-9 && (h.get(c, 3) - 1.0).abs() < 1e-9);
            assert!((h.get(c, 8) - 1.0).abs() < 1e-9 && h.get(c, 0).abs() < 1e-9);
            assert!((l.get(c, 0) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn normal_derivative_of_radial_quadratic() {
        let s = ball(0.05);
        let q = s.sample(1, |x| vec![(x.norm_squared() - 1.0) / 3.0]);
        let zero = vec![0.0; s.mesh().n_vertices()];
        let d = normal_derivative(&s, &q, &zero).unwrap();
        for (v, dn) in d.iter().enumerate() {
            let along = s.mesh().vertices()[v].dot(&s.mesh().vertex_normals()[v]);
            assert!((dn - 2.0 * along / 3.0).abs() < 1e-9, "{dn}");
        }
    }
}
