//! Mesh generators for the analytic test surfaces.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::{build_surface, SurfaceMesh, Vec3};
use crate::error::{Error, Result};
use crate::harmonics::harmonic_mixture;

/// Unit-sphere icosahedron refined `subdiv` times (vertex count `10·4^s + 2`).
fn unit_icosphere_raw(subdiv: u32) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vec3::new(p[0], p[1], p[2]).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
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
    for _ in 0..subdiv {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let ab = midpoint(f[0], f[1], &mut vertices);
            let bc = midpoint(f[1], f[2], &mut vertices);
            let ca = midpoint(f[2], f[0], &mut vertices);
            next.push([f[0], ab, ca]);
            next.push([f[1], bc, ab]);
            next.push([f[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    (vertices, faces)
}

pub fn icosphere(subdiv: u32, radius: f64) -> Result<SurfaceMesh> {
    check_positive("radius", radius)?;
    let (v, f) = unit_icosphere_raw(subdiv);
    build_surface(v.into_iter().map(|p| p * radius).collect(), f)
}

/// Axis-aligned ellipsoid with semi-axes `axes`, sampled by stretching an icosphere.
pub fn ellipsoid(axes: [f64; 3], subdiv: u32) -> Result<SurfaceMesh> {
    for a in axes {
        check_positive("semi-axis", a)?;
    }
    let (v, f) = unit_icosphere_raw(subdiv);
    build_surface(
        v.into_iter().map(|p| Vec3::new(p.x * axes[0], p.y * axes[1], p.z * axes[2])).collect(),
        f,
    )
}

/// Star-shaped surface `r(x̂) = R (1 + Σ a·H_{l,m}(x̂))` over an icosphere.
pub fn perturbed_sphere(
    radius: f64,
    modes: &[(usize, usize, f64)],
    subdiv: u32,
) -> Result<SurfaceMesh> {
    check_positive("radius", radius)?;
    let poly = harmonic_mixture(modes)?;
    let (v, f) = unit_icosphere_raw(subdiv);
    let mut out = Vec::with_capacity(v.len());
    for p in v {
        let s = 1.0 + poly.eval(&p);
        if !(s > 0.05) {
            return Err(Error::InvalidInput(format!(
                "perturbation amplitude collapses the radius ({s:.3})"
            )));
        }
        out.push(p * (radius * s));
    }
    build_surface(out, f)
}

/// Cube `[-half, half]³` with each face split into an `n × n` grid of quads.
pub fn cube(half: f64, n: usize) -> Result<SurfaceMesh> {
    check_positive("half-width", half)?;
    if n < 1 {
        return Err(Error::InvalidInput("cube needs at least one cell per face".into()));
    }
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let m = n as i64;
    let mut vid = |g: [i64; 3], vertices: &mut Vec<Vec3>| -> usize {
        *index.entry(g).or_insert_with(|| {
            let s = |k: i64| half * (2.0 * k as f64 / m as f64 - 1.0);
            vertices.push(Vec3::new(s(g[0]), s(g[1]), s(g[2])));
            vertices.len() - 1
        })
    };
    for axis in 0..3 {
        let (a1, a2) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, m] {
            for i in 0..m {
                for j in 0..m {
                    let corner = |di: i64, dj: i64| {
                        let mut g = [0i64; 3];
                        g[axis] = side;
                        g[a1] = i + di;
                        g[a2] = j + dj;
                        g
                    };
                    let q = [
                        vid(corner(0, 0), &mut vertices),
                        vid(corner(1, 0), &mut vertices),
                        vid(corner(1, 1), &mut vertices),
                        vid(corner(0, 1), &mut vertices),
                    ];
                    faces.push([q[0], q[1], q[2]]);
                    faces.push([q[0], q[2], q[3]]);
                }
            }
        }
    }
    // Orientation is repaired by the validator.
    build_surface(vertices, faces)
}

/// Regular tetrahedron inscribed in the unit sphere.
pub fn tetrahedron() -> Result<SurfaceMesh> {
    let s = 1.0 / 3f64.sqrt();
    let vertices = vec![
        Vec3::new(s, s, s),
        Vec3::new(s, -s, -s),
        Vec3::new(-s, s, -s),
        Vec3::new(-s, -s, s),
    ];
    build_surface(vertices, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
}

/// Two unit spheres centred at `z = ±separation` joined by a cylindrical neck
/// of radius `neck`, blended by concave fillets of radius `fillet`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumbbellProfile {
    pub neck: f64,
    pub fillet: f64,
    pub separation: f64,
}

impl Default for DumbbellProfile {
    fn default() -> Self {
        Self { neck: 0.1, fillet: 0.15, separation: 1.2 }
    }
}

impl DumbbellProfile {
    /// Height of the fillet centres, `z_f ≤ 0` for the lower half.
    fn fillet_height(&self) -> f64 {
        let (b, rho, c) = (self.neck, self.fillet, self.separation);
        -c + ((1.0 + rho).powi(2) - (b + rho).powi(2)).sqrt()
    }

    fn validate(&self) -> Result<()> {
        check_positive("neck", self.neck)?;
        check_positive("fillet", self.fillet)?;
        if self.neck + self.fillet >= 1.0 + self.fillet || self.neck >= 1.0 {
            return Err(Error::InvalidInput("neck must be thinner than the lobes".into()));
        }
        if self.fillet_height() > 0.0 {
            return Err(Error::InvalidInput(
                "lobes too close for the requested neck and fillet".into(),
            ));
        }
        Ok(())
    }

    /// Lower-half profile `(r, z)` sampled from the south pole up to `z = 0`.
    fn lower_profile(&self, spacing: f64) -> Vec<(f64, f64)> {
        let (b, rho, c) = (self.neck, self.fillet, self.separation);
        let zf = self.fillet_height();
        let centre = (0.0, -c);
        let fc = (b + rho, zf);
        // Tangency with the lobe, measured as the angle from the south pole.
        let dir = ((fc.0 - centre.0) / (1.0 + rho), (fc.1 - centre.1) / (1.0 + rho));
        let alpha_t = dir.0.atan2(-dir.1);
        // Fillet runs from the tangency point to the neck point (b, zf).
        let beta0 = (-dir.1).atan2(-dir.0);
        let beta1 = -PI;
        let arc_lobe = alpha_t;
        let arc_fillet = rho * (beta1 - beta0).abs();
        let arc_neck = -zf;

        let mut out = Vec::new();
        let push_arc = |out: &mut Vec<(f64, f64)>, len: f64, f: &dyn Fn(f64) -> (f64, f64), include_end: bool| {
            let k = ((len / spacing).ceil() as usize).max(1);
            let last = if include_end { k } else { k - 1 };
            for i in 0..=last {
                out.push(f(i as f64 / k as f64));
            }
        };
        push_arc(
            &mut out,
            arc_lobe,
            &|s| {
                let a = s * alpha_t;
                (a.sin(), centre.1 - a.cos())
            },
            false,
        );
        push_arc(
            &mut out,
            arc_fillet,
            &|s| {
                let beta = beta0 + s * (beta1 - beta0);
                // Concave arc: points lie at distance rho from fc, facing the axis.
                (fc.0 + rho * beta.cos(), fc.1 + rho * beta.sin())
            },
            false,
        );
        if arc_neck > 0.0 {
            push_arc(&mut out, arc_neck, &|s| (b, zf * (1.0 - s)), true);
        } else {
            out.push((b, 0.0));
        }
        out
    }
}

/// Surface of revolution for a dumbbell profile.
pub fn dumbbell(profile: DumbbellProfile, profile_spacing: f64, azimuthal: usize) -> Result<SurfaceMesh> {
    profile.validate()?;
    check_positive("profile spacing", profile_spacing)?;
    if azimuthal < 6 {
        return Err(Error::InvalidInput("dumbbell needs at least 6 azimuthal segments".into()));
    }
    let lower = profile.lower_profile(profile_spacing);
    // Mirror to the upper half, skipping the shared z = 0 ring.
    let mut rings: Vec<(f64, f64)> = lower.clone();
    for &(r, z) in lower.iter().rev().skip(1) {
        rings.push((r, -z));
    }
    // First and last entries are the poles.
    let pole_s = rings[0];
    let pole_n = *rings.last().unwrap();
    let body = &rings[1..rings.len() - 1];

    let mut vertices = vec![Vec3::new(0.0, 0.0, pole_s.1)];
    for (k, &(r, z)) in body.iter().enumerate() {
        // Stagger alternate rings to improve triangle shape.
        let shift = if k % 2 == 0 { 0.0 } else { 0.5 };
        for j in 0..azimuthal {
            let phi = 2.0 * PI * (j as f64 + shift) / azimuthal as f64;
            vertices.push(Vec3::new(r * phi.cos(), r * phi.sin(), z));
        }
    }
    vertices.push(Vec3::new(0.0, 0.0, pole_n.1));
    let north = vertices.len() - 1;
    let ring = |k: usize, j: usize| 1 + k * azimuthal + (j % azimuthal);

    let mut faces = Vec::new();
    for j in 0..azimuthal {
        faces.push([0, ring(0, j + 1), ring(0, j)]);
    }
    for k in 0..body.len() - 1 {
        for j in 0..azimuthal {
            if k % 2 == 0 {
                faces.push([ring(k, j), ring(k, j + 1), ring(k + 1, j)]);
                faces.push([ring(k, j + 1), ring(k + 1, j + 1), ring(k + 1, j)]);
            } else {
                faces.push([ring(k, j), ring(k, j + 1), ring(k + 1, j + 1)]);
                faces.push([ring(k, j), ring(k + 1, j + 1), ring(k + 1, j)]);
            }
        }
    }
    let last = body.len() - 1;
    for j in 0..azimuthal {
        faces.push([north, ring(last, j), ring(last, j + 1)]);
    }
    build_surface(vertices, faces)
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} must be positive and finite, got {v}")))
    }
}
