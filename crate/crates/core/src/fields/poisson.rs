//! Dirichlet Poisson problems on the sampled domain.
//!
//! The 7-point Laplacian is closed at the boundary with a linear ghost value
//! placed so that the interpolant takes the boundary datum at the crossing,
//! which keeps the system symmetric positive definite.

use rayon::prelude::*;

use super::{extrapolate_band, Field, InteriorSampling};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Relative residual at which conjugate gradients stop.
pub const SOLVER_TOLERANCE: f64 = 1e-10;

/// Dirichlet data on the boundary.
#[derive(Clone, Copy)]
pub enum BoundaryData<'a> {
    Zero,
    /// Per-vertex values, interpolated linearly over faces.
    Vertex(&'a [f64]),
    Function(&'a (dyn Fn(&Vec3) -> f64 + Sync)),
}

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub field: Field,
    pub iterations: usize,
    pub relative_residual: f64,
}

struct Csr {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl Csr {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.diag.len())
            .into_par_iter()
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                for e in self.offsets[i]..self.offsets[i + 1] {
                    acc += self.vals[e] * x[self.cols[e]];
                }
                acc
            })
            .collect()
    }
}

fn assemble(s: &InteriorSampling) -> Csr {
    let g = s.grid();
    let ih2 = 1.0 / (g.h * g.h);
    let n = s.inside_cells().len();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(6 * n);
    let mut vals = Vec::with_capacity(6 * n);
    let mut diag = vec![0.0; n];
    offsets.push(0);
    for (k, &cell) in s.inside_cells().iter().enumerate() {
        for axis in 0..3 {
            for off in [-1i64, 1] {
                let nb = g.neighbor(cell, axis, off).expect("inside cells are padded by the band");
                if let Some(j) = s.compact_index(nb) {
                    diag[k] += ih2;
                    cols.push(j);
                    vals.push(-ih2);
                }
            }
        }
        for c in s.crossings(k) {
            diag[k] += ih2 / c.theta;
        }
        offsets.push(cols.len());
    }
    Csr { offsets, cols, vals, diag }
}

fn boundary_value(s: &InteriorSampling, bc: &BoundaryData, c: &super::Crossing) -> f64 {
    match bc {
        BoundaryData::Zero => 0.0,
        BoundaryData::Vertex(v) => s.mesh().interpolate(v, c.face, &c.bary),
        BoundaryData::Function(f) => f(&c.point),
    }
}

/// Solves `Δq = f` in the domain with `q = g` on the boundary.
///
/// The result holds the solution on inside cells and its extrapolation on
/// band cells.
pub fn poisson_dirichlet(s: &InteriorSampling, source: &Field, bc: BoundaryData) -> Result<PoissonSolution> {
    if source.ncomp != 1 {
        return Err(Error::InvalidInput(format!("source must be scalar, got {} components", source.ncomp)));
    }
    if let BoundaryData::Vertex(v) = bc {
        if v.len() != s.mesh().n_vertices() {
            return Err(Error::InvalidInput(format!(
                "expected {} boundary values, got {}",
                s.mesh().n_vertices(),
                v.len()
            )));
        }
    }
    let ih2 = 1.0 / (s.h() * s.h());
    let a = assemble(s);
    let b: Vec<f64> = s
        .inside_cells()
        .iter()
        .enumerate()
        .map(|(k, &cell)| {
            let ghost: f64 = s.crossings(k).iter().map(|c| boundary_value(s, &bc, c) * ih2 / c.theta).sum();
            ghost - source.get(cell, 0)
        })
        .collect();
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite source or boundary data".into()));
    }
    let (x, iterations, relative_residual) = conjugate_gradient(&a, &b)?;
    let mut field = Field::invalid(s.grid().n_cells(), 1);
    for (&cell, v) in s.inside_cells().iter().zip(&x) {
        field.set(cell, 0, *v);
    }
    extrapolate_band(s, &mut field);
    Ok(PoissonSolution { field, iterations, relative_residual })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn conjugate_gradient(a: &Csr, b: &[f64]) -> Result<(Vec<f64>, usize, f64)> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let max_iter = 20 * n.max(50);
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&a.diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = a.apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverDiverged { iterations: it, residual: dot(&r, &r).sqrt() / bnorm });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = dot(&r, &r).sqrt() / bnorm;
        if rel <= SOLVER_TOLERANCE {
            return Ok((x, it, rel));
        }
        if !rel.is_finite() {
            return Err(Error::SolverDiverged { iterations: it, residual: rel });
        }
        for i in 0..n {
            z[i] = r[i] / a.diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDiverged { iterations: max_iter, residual: dot(&r, &r).sqrt() / bnorm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::build_sampling;
    use crate::geometry::shapes::icosphere;

    fn sup_error(h: f64) -> f64 {
        let mesh = icosphere(4, 1.0).unwrap();
        let s = build_sampling(&mesh, h).unwrap();
        let f = s.sample(1, |_| vec![6.0]);
        let q = poisson_dirichlet(&s, &f, BoundaryData::Zero).unwrap();
        s.inside_cells()
            .iter()
            .map(|&c| (q.field.get(c, 0) - (s.grid().position(c).norm_squared() - 1.0)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn manufactured_quadratic_converges_at_second_order() {
        let coarse = sup_error(0.1);
        let fine = sup_error(0.05);
        assert!(fine < 5e-3, "{fine}");
        let ratio = coarse / fine;
        assert!((3.2..=4.8).contains(&ratio), "ratio {ratio} ({coarse} / {fine})");
    }

    #[test]
    fn harmonic_data_satisfies_maximum_principle() {
        let mesh = icosphere(3, 1.0).unwrap();
        let s = build_sampling(&mesh, 0.1).unwrap();
        let g: Vec<f64> = mesh.vertices().iter().map(|v| v.x * v.y + v.z).collect();
        let (lo, hi) = g.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let zero = Field::zeros_on(&s, 1);
        let q = poisson_dirichlet(&s, &zero, BoundaryData::Vertex(&g)).unwrap();
        for &c in s.inside_cells() {
            let v = q.field.get(c, 0);
            assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn zero_problem_is_zero() {
        let s = build_sampling(&icosphere(3, 1.0).unwrap(), 0.1).unwrap();
        let q = poisson_dirichlet(&s, &Field::zeros_on(&s, 1), BoundaryData::Zero).unwrap();
        assert_eq!(q.iterations, 0);
        assert!(s.inside_cells().iter().all(|&c| q.field.get(c, 0) == 0.0));
    }
}
