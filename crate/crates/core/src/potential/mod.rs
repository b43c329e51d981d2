//! Interior harmonic problems by a collocated double-layer boundary integral equation.
//!
//! The density `σ` is piecewise linear on the flat mesh triangles and is
//! collocated at the vertices. The interior limit of the double layer gives
//! `(W − ½I)σ = ψ`; the singular self-term is completed so that the constant
//! density maps to `−1`, which makes the constant solution exact.

mod quadrature;

pub use quadrature::{double_layer_kernel, Panel};

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{tangential_gradient, MeshLocator, SurfaceMesh, Vec3, MIN_CURVATURE_VERTICES};

const CONDITION_LIMIT: f64 = 1e12;
const POWER_ITERATIONS: usize = 30;

/// Factored double-layer collocation operator for one mesh.
pub struct LayerOperator {
    mesh: SurfaceMesh,
    panels: Vec<Panel>,
    locator: MeshLocator,
    matrix: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    condition: f64,
    dtn_rows: OnceLock<DMatrix<f64>>,
}

impl std::fmt::Debug for LayerOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LayerOperator")
            .field("vertices", &self.mesh.n_vertices())
            .field("condition", &self.condition)
            .finish()
    }
}

/// Builds and factors the collocation matrix.
pub fn assemble(mesh: &SurfaceMesh) -> Result<LayerOperator> {
    let n = mesh.n_vertices();
    if n < MIN_CURVATURE_VERTICES {
        return Err(Error::InsufficientNeighborhood { vertex: 0, found: n, required: MIN_CURVATURE_VERTICES });
    }
    let v = mesh.vertices();
    let faces = mesh.faces();
    let panels: Vec<Panel> = faces.iter().map(|f| Panel::new([v[f[0]], v[f[1]], v[f[2]]])).collect();

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            for (fi, f) in faces.iter().enumerate() {
                if f.contains(&i) {
                    // Coplanar with the collocation point: the kernel vanishes.
                    continue;
                }
                let w = panels[fi].weights(&v[i]);
                for k in 0..3 {
                    row[f[k]] += w[k];
                }
            }
            let off: f64 = row.iter().sum();
            row[i] = -1.0 - off;
            row
        })
        .collect();
    let matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    drop(rows);
    let lu = matrix.clone().lu();
    let condition = estimate_condition(&matrix, &lu)?;
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::IllConditioned(condition));
    }
    Ok(LayerOperator {
        mesh: mesh.clone(),
        panels,
        locator: MeshLocator::new(mesh),
        matrix,
        lu,
        condition,
        dtn_rows: OnceLock::new(),
    })
}

/// Ratio of the dominant eigenvalue magnitudes of `A` and `A⁻¹` by power iteration.
fn estimate_condition(a: &DMatrix<f64>, lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> Result<f64> {
    let n = a.nrows();
    let start = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_75).fract());
    let norm_of = |mut x: DVector<f64>, apply: &dyn Fn(&DVector<f64>) -> Option<DVector<f64>>| -> Option<f64> {
        let mut lambda = 0.0;
        for _ in 0..POWER_ITERATIONS {
            x /= x.norm();
            let y = apply(&x)?;
            lambda = y.norm();
            if !lambda.is_finite() {
                return None;
            }
            x = y;
        }
        Some(lambda)
    };
    let big = norm_of(start.clone(), &|x| Some(a * x)).unwrap_or(f64::INFINITY);
    let small_inv = match norm_of(start, &|x| lu.solve(x)) {
        Some(s) => s,
        None => return Err(Error::IllConditioned(f64::INFINITY)),
    };
    Ok(big * small_inv)
}

impl LayerOperator {
    pub fn mesh(&self) -> &SurfaceMesh {
        &self.mesh
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn check_len(&self, psi: &[f64]) -> Result<()> {
        if psi.len() != self.mesh.n_vertices() {
            return Err(Error::InvalidInput(format!(
                "boundary data has {} values for {} vertices",
                psi.len(),
                self.mesh.n_vertices()
            )));
        }
        Ok(())
    }

    /// Solves for the layer density reproducing the boundary trace `psi`.
    pub fn density(&self, psi: &[f64]) -> Result<Vec<f64>> {
        self.check_len(psi)?;
        let rhs = DVector::from_column_slice(psi);
        let sol = self.lu.solve(&rhs).ok_or(Error::IllConditioned(f64::INFINITY))?;
        Ok(sol.as_slice().to_vec())
    }

    /// Raw double-layer potential of a density, without singularity subtraction.
    pub fn double_layer(&self, x: &Vec3, density: &[f64]) -> f64 {
        let faces = self.mesh.faces();
        let mut acc = 0.0;
        for (fi, p) in self.panels.iter().enumerate() {
            let w = p.weights(x);
            let f = faces[fi];
            acc += w[0] * density[f[0]] + w[1] * density[f[1]] + w[2] * density[f[2]];
        }
        acc
    }

    /// Evaluation row `r` with `u(x) = r · σ` for any density, using subtraction
    /// of the density at the nearest surface point.
    pub fn evaluation_row(&self, x: &Vec3) -> Vec<f64> {
        let n = self.mesh.n_vertices();
        let faces = self.mesh.faces();
        let mut row = vec![0.0; n];
        for (fi, p) in self.panels.iter().enumerate() {
            let w = p.weights(x);
            let f = faces[fi];
            for k in 0..3 {
                row[f[k]] += w[k];
            }
        }
        let total: f64 = row.iter().sum();
        let near = self.locator.closest(x);
        let f = faces[near.face];
        for k in 0..3 {
            row[f[k]] -= (1.0 + total) * near.bary[k];
        }
        row
    }

    /// Interior values of several densities at once (no distance checks).
    pub fn evaluate_densities(&self, points: &[Vec3], densities: &[&[f64]]) -> Vec<Vec<f64>> {
        let faces = self.mesh.faces();
        let per_point: Vec<Vec<f64>> = points
            .par_iter()
            .map(|x| {
                let mut acc = vec![0.0; densities.len()];
                let mut total = 0.0;
                for (fi, p) in self.panels.iter().enumerate() {
                    let w = p.weights(x);
                    let f = faces[fi];
                    total += w[0] + w[1] + w[2];
                    for (a, d) in acc.iter_mut().zip(densities) {
                        *a += w[0] * d[f[0]] + w[1] * d[f[1]] + w[2] * d[f[2]];
                    }
                }
                let near = self.locator.closest(x);
                let f = faces[near.face];
                for (a, d) in acc.iter_mut().zip(densities) {
                    let star = near.bary[0] * d[f[0]] + near.bary[1] * d[f[1]] + near.bary[2] * d[f[2]];
                    *a -= (1.0 + total) * star;
                }
                acc
            })
            .collect();
        (0..densities.len())
            .map(|k| per_point.iter().map(|v| v[k]).collect())
            .collect()
    }

    /// Rejects points outside the domain or within one local spacing of the boundary.
    pub fn check_interior(&self, points: &[Vec3]) -> Result<()> {
        for (i, x) in points.iter().enumerate() {
            let near = self.locator.closest(x);
            let f = self.mesh.faces()[near.face];
            let spacing = f.iter().map(|&v| self.mesh.local_spacing(v)).sum::<f64>() / 3.0;
            let normal = self.mesh.interpolated_normal(near.face, &near.bary);
            let outside = (x - near.point).dot(&normal) > 0.0;
            if outside {
                return Err(Error::InvalidInput(format!("point {i} lies outside the domain")));
            }
            if near.distance < spacing {
                return Err(Error::PointTooClose { index: i, distance: near.distance, spacing });
            }
        }
        Ok(())
    }

    /// Values at interior `points` of the harmonic function with boundary trace `psi`.
    pub fn harmonic_extension(&self, psi: &[f64], points: &[Vec3]) -> Result<Vec<f64>> {
        self.check_interior(points)?;
        let sigma = self.density(psi)?;
        Ok(self.evaluate_densities(points, &[&sigma]).pop().unwrap())
    }

    /// Same as [`Self::harmonic_extension`] for several boundary traces sharing the points.
    pub fn harmonic_extension_many(&self, psis: &[&[f64]], points: &[Vec3]) -> Result<Vec<Vec<f64>>> {
        self.check_interior(points)?;
        let sigmas: Vec<Vec<f64>> = psis.iter().map(|p| self.density(p)).collect::<Result<_>>()?;
        let refs: Vec<&[f64]> = sigmas.iter().map(|s| s.as_slice()).collect();
        Ok(self.evaluate_densities(points, &refs))
    }

    /// Rows `D` with `𝒩ψ = D σ`: a quadratic fit through interior samples at depths
    /// `h/2, h, 3h/2` along `−N`, differentiated at the boundary.
    fn dtn_matrix(&self) -> &DMatrix<f64> {
        self.dtn_rows.get_or_init(|| {
            let n = self.mesh.n_vertices();
            let rows: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let x = self.mesh.vertices()[i];
                    let nrm = self.mesh.vertex_normals()[i];
                    let h = self.mesh.local_spacing(i);
                    let r1 = self.evaluation_row(&(x - nrm * (0.5 * h)));
                    let r2 = self.evaluation_row(&(x - nrm * h));
                    let r3 = self.evaluation_row(&(x - nrm * (1.5 * h)));
                    (0..n).map(|j| (5.0 * r1[j] - 8.0 * r2[j] + 3.0 * r3[j]) / h).collect()
                })
                .collect();
            DMatrix::from_fn(n, n, |i, j| rows[i][j])
        })
    }

    /// Dirichlet-to-Neumann map: outward normal derivative of the harmonic extension.
    pub fn dtn(&self, psi: &[f64]) -> Result<Vec<f64>> {
        let sigma = DVector::from_vec(self.density(psi)?);
        Ok((self.dtn_matrix() * sigma).as_slice().to_vec())
    }

    /// Interior Green's function `1/(4π|x−y|) − H(x, y)` with the harmonic corrector
    /// solved from its boundary trace.
    pub fn greens_function(&self, x: &Vec3, y: &Vec3) -> Result<f64> {
        let r = (x - y).norm();
        if !(r > 1e-12) {
            return Err(Error::CoincidentPoints);
        }
        self.check_interior(&[*x, *y])?;
        let trace: Vec<f64> = self
            .mesh
            .vertices()
            .iter()
            .map(|v| 1.0 / (4.0 * PI * (v - y).norm()))
            .collect();
        let sigma = self.density(&trace)?;
        let h = self.evaluate_densities(&[*x], &[&sigma])[0][0];
        Ok(1.0 / (4.0 * PI * r) - h)
    }

    /// Green's function for many pairs, one corrector solve per distinct source.
    pub fn greens_function_pairs(&self, pairs: &[(Vec3, Vec3)]) -> Result<Vec<f64>> {
        let mut pts = Vec::with_capacity(pairs.len() * 2);
        for (x, y) in pairs {
            if !((x - y).norm() > 1e-12) {
                return Err(Error::CoincidentPoints);
            }
            pts.push(*x);
            pts.push(*y);
        }
        self.check_interior(&pts)?;
        let traces: Vec<Vec<f64>> = pairs
            .iter()
            .map(|(_, y)| self.mesh.vertices().iter().map(|v| 1.0 / (4.0 * PI * (v - y).norm())).collect())
            .collect();
        pairs
            .par_iter()
            .zip(traces.par_iter())
            .map(|((x, y), trace)| {
                let sigma = self.density(trace)?;
                let h = self.evaluate_densities(&[*x], &[&sigma])[0][0];
                Ok(1.0 / (4.0 * PI * (x - y).norm()) - h)
            })
            .collect()
    }

    /// Sup of `|∇ψ_H|` over interior samples and of the full boundary gradient over vertices.
    pub fn bernstein_gap(&self, psi: &[f64], interior_samples: &[Vec3]) -> Result<(f64, f64)> {
        self.check_len(psi)?;
        let step = 0.5 * self.mesh.mean_edge_length();
        // Stencil points must themselves be admissible.
        let mut stencil = Vec::with_capacity(interior_samples.len() * 6);
        for x in interior_samples {
            for a in 0..3 {
                let mut e = Vec3::zeros();
                e[a] = step;
                stencil.push(x + e);
                stencil.push(x - e);
            }
        }
        let values = self.harmonic_extension(psi, &stencil)?;
        let interior_sup = values
            .chunks(6)
            .map(|c| {
                Vec3::new(c[0] - c[1], c[2] - c[3], c[4] - c[5]).norm() / (2.0 * step)
            })
            .fold(0.0, f64::max);
        let tangential = tangential_gradient(&self.mesh, psi)?;
        let normal = self.dtn(psi)?;
        let boundary_sup = tangential
            .iter()
            .zip(&normal)
            .map(|(t, n)| (t.norm_squared() + n * n).sqrt())
            .fold(0.0, f64::max);
        Ok((interior_sup, boundary_sup))
    }
}

/// Closed-form Dirichlet Green's function of the ball of radius `radius` centred at the origin.
pub fn ball_green_oracle(radius: f64, x: &Vec3, y: &Vec3) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    if x.norm() >= radius || y.norm() >= radius {
        return Err(Error::OutsideBall { radius });
    }
    let r = (x - y).norm();
    if !(r > 0.0) {
        return Err(Error::CoincidentPoints);
    }
    let r2 = radius * radius;
    let image = (x.norm_squared() * y.norm_squared() - 2.0 * r2 * x.dot(y) + r2 * r2).sqrt();
    Ok((1.0 / r - radius / image) / (4.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::boundary_integral;
    use crate::geometry::shapes::{ellipsoid, icosphere};
    use crate::harmonics::solid_harmonic;

    fn unit3() -> LayerOperator {
        assemble(&icosphere(3, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn constant_density_gives_minus_one_inside() {
        let op = unit3();
        let ones = vec![1.0; op.mesh().n_vertices()];
        let raw = op.double_layer(&Vec3::zeros(), &ones);
        assert!((raw + 1.0).abs() < 1e-6, "raw Gauss integral {raw}");
        let ext = op.harmonic_extension(&ones, &[Vec3::zeros(), Vec3::new(0.3, -0.2, 0.4)]).unwrap();
        for v in ext {
            assert!((v - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn linear_and_quadratic_traces() {
        let op = unit3();
        let m = op.mesh();
        let z: Vec<f64> = m.vertices().iter().map(|v| v.z).collect();
        let pts = [Vec3::new(0.1, 0.2, 0.3), Vec3::new(-0.4, 0.1, -0.2), Vec3::zeros()];
        let vals = op.harmonic_extension(&z, &pts).unwrap();
        for (p, v) in pts.iter().zip(vals) {
            assert!((v - p.z).abs() < 1e-3, "{v} vs {}", p.z);
        }
        let y2 = solid_harmonic(2, 0).unwrap();
        let psi: Vec<f64> = m.vertices().iter().map(|v| y2.eval(v)).collect();
        let p = Vec3::new(0.3, 0.3, 0.2) * (0.5 / 0.469_041_575_982_343);
        let val = op.harmonic_extension(&psi, &[p]).unwrap()[0];
        assert!((val - y2.eval(&p)).abs() < 1e-3, "{val} vs {}", y2.eval(&p));
    }

    #[test]
    fn points_near_or_outside_are_rejected() {
        let op = unit3();
        let psi = vec![0.0; op.mesh().n_vertices()];
        assert!(matches!(
            op.harmonic_extension(&psi, &[Vec3::new(0.0, 0.0, 0.99)]),
            Err(Error::PointTooClose { .. })
        ));
        assert!(op.harmonic_extension(&psi, &[Vec3::new(0.0, 0.0, 1.5)]).is_err());
    }

    #[test]
    fn dtn_of_constants_and_linears() {
        let op = unit3();
        let m = op.mesh();
        let ones = vec![1.0; m.n_vertices()];
        let d = op.dtn(&ones).unwrap();
        assert!(d.iter().all(|x| x.abs() < 1e-5));
        let y: Vec<f64> = m.vertices().iter().map(|v| v.y).collect();
        let d = op.dtn(&y).unwrap();
        let err = d.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 0.02, "{err}");
    }

    #[test]
    fn dtn_is_linear_and_positive() {
        let op = unit3();
        let m = op.mesh();
        let a: Vec<f64> = m.vertices().iter().map(|v| v.x * v.y + v.z).collect();
        let b: Vec<f64> = m.vertices().iter().map(|v| (2.0 * v.x).sin()).collect();
        let combo: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 2.0 * p - 3.0 * q).collect();
        let (da, db, dc) = (op.dtn(&a).unwrap(), op.dtn(&b).unwrap(), op.dtn(&combo).unwrap());
        for i in 0..a.len() {
            assert!((dc[i] - (2.0 * da[i] - 3.0 * db[i])).abs() < 1e-10);
        }
        for psi in [&a, &b, &combo] {
            let d = op.dtn(psi).unwrap();
            let e: Vec<f64> = psi.iter().zip(&d).map(|(p, q)| p * q).collect();
            assert!(boundary_integral(m, &e) >= -1e-6);
        }
    }

    #[test]
    fn mean_value_property() {
        let op = unit3();
        let m = op.mesh();
        let psi: Vec<f64> = m.vertices().iter().map(|v| (v.x + 0.3 * v.y * v.z).exp()).collect();
        let centre = op.harmonic_extension(&psi, &[Vec3::zeros()]).unwrap()[0];
        let avg = boundary_integral(m, &psi) / m.total_area();
        assert!((centre - avg).abs() < 1e-3, "{centre} vs {avg}");
    }

    #[test]
    fn ball_oracle_examples() {
        let g = ball_green_oracle(1.0, &Vec3::zeros(), &Vec3::new(0.5, 0.0, 0.0)).unwrap();
        assert!((g - 1.0 / (4.0 * PI)).abs() < 1e-15);
        let x = Vec3::new(0.1, 0.2, -0.3);
        let y = Vec3::new(-0.4, 0.05, 0.2);
        assert_eq!(ball_green_oracle(1.0, &x, &y).unwrap(), ball_green_oracle(1.0, &y, &x).unwrap());
        let edge = ball_green_oracle(1.0, &x, &(Vec3::new(0.6, 0.0, 0.8) * (1.0 - 1e-9))).unwrap();
        assert!(edge.abs() < 1e-7);
        assert!(matches!(ball_green_oracle(1.0, &x, &x), Err(Error::CoincidentPoints)));
        assert!(matches!(ball_green_oracle(1.0, &x, &Vec3::new(2.0, 0.0, 0.0)), Err(Error::OutsideBall { .. })));
    }

    #[test]
    fn bem_green_matches_images() {
        let op = unit3();
        let x = Vec3::zeros();
        let y = Vec3::new(0.5, 0.0, 0.0);
        let g = op.greens_function(&x, &y).unwrap();
        let exact = 1.0 / (4.0 * PI);
        assert!((g - exact).abs() / exact < 0.02, "{g} vs {exact}");
        let g2 = op.greens_function(&y, &x).unwrap();
        assert!((g - g2).abs() < 1e-3);
        assert!(matches!(op.greens_function(&x, &x), Err(Error::CoincidentPoints)));
    }

    #[test]
    fn ellipsoid_operator_is_well_conditioned() {
        let op = assemble(&ellipsoid([2.0, 1.0, 1.0], 3).unwrap()).unwrap();
        assert!(op.condition_estimate().is_finite() && op.condition_estimate() < 1e4);
    }
}
