use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};
use rayon::prelude::*;

use super::{Mat3, SurfaceMesh, Vec3};
use crate::error::{Error, Result};

/// Meshes coarser than this are rejected for curvature estimation.
pub const MIN_CURVATURE_VERTICES: usize = 162;
const MIN_FIT_NEIGHBORS: usize = 5;
const MIN_GRADIENT_NEIGHBORS: usize = 3;

#[derive(Debug, Clone)]
pub struct CurvatureData {
    /// Orthonormal tangent frame `(t1, t2)` at each vertex.
    pub frames: Vec<[Vec3; 2]>,
    /// Second fundamental form in the stored frame.
    pub theta: Vec<Matrix2<f64>>,
    /// Eigenvalues of `theta`, ascending.
    pub principal_curvatures: Vec<[f64; 2]>,
    /// Largest pointwise Frobenius norm of `theta`.
    pub theta_sup: f64,
}

impl CurvatureData {
    /// `theta` at vertex `v` as a symmetric tangential 3×3 tensor.
    pub fn ambient(&self, v: usize) -> Mat3 {
        let [t1, t2] = self.frames[v];
        let th = self.theta[v];
        t1 * t1.transpose() * th[(0, 0)]
            + (t1 * t2.transpose() + t2 * t1.transpose()) * th[(0, 1)]
            + t2 * t2.transpose() * th[(1, 1)]
    }

    /// Largest absolute principal curvature at `v`.
    pub fn max_abs_curvature(&self, v: usize) -> f64 {
        let k = self.principal_curvatures[v];
        k[0].abs().max(k[1].abs())
    }

    /// Normal curvature `θ(d, d)` for a tangent vector `d`.
    pub fn normal_curvature(&self, v: usize, d: &Vec3) -> f64 {
        let [t1, t2] = self.frames[v];
        let c = Vector2::new(d.dot(&t1), d.dot(&t2));
        (c.transpose() * self.theta[v] * c)[(0, 0)]
    }
}

/// Deterministic tangent frame orthogonal to `n`.
pub(crate) fn tangent_frame(n: &Vec3) -> [Vec3; 2] {
    let axis = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Vec3::x()
    } else if n.y.abs() <= n.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let t1 = (axis - n * n.dot(&axis)).normalize();
    let t2 = n.cross(&t1);
    [t1, t2]
}

/// Per-vertex second fundamental form from a least-squares quadric fit over the 2-ring.
pub fn second_fundamental_form(mesh: &SurfaceMesh) -> Result<CurvatureData> {
    if mesh.n_vertices() < MIN_CURVATURE_VERTICES {
        return Err(Error::InsufficientNeighborhood {
            vertex: 0,
            found: mesh.n_vertices(),
            required: MIN_CURVATURE_VERTICES,
        });
    }
    let fits: Vec<Result<([Vec3; 2], Matrix2<f64>)>> =
        (0..mesh.n_vertices()).into_par_iter().map(|v| fit_vertex(mesh, v)).collect();
    let mut frames = Vec::with_capacity(fits.len());
    let mut theta = Vec::with_capacity(fits.len());
    for f in fits {
        let (fr, th) = f?;
        frames.push(fr);
        theta.push(th);
    }
    let principal_curvatures: Vec<[f64; 2]> = theta
        .iter()
        .map(|th| {
            let e = SymmetricEigen::new(*th).eigenvalues;
            [e[0].min(e[1]), e[0].max(e[1])]
        })
        .collect();
    let theta_sup = theta.iter().map(|t| t.norm()).fold(0.0, f64::max);
    Ok(CurvatureData { frames, theta, principal_curvatures, theta_sup })
}

fn fit_vertex(mesh: &SurfaceMesh, v: usize) -> Result<([Vec3; 2], Matrix2<f64>)> {
    let ring = mesh.two_ring(v);
    if ring.len() < MIN_FIT_NEIGHBORS {
        return Err(Error::InsufficientNeighborhood {
            vertex: v,
            found: ring.len(),
            required: MIN_FIT_NEIGHBORS,
        });
    }
    let x = mesh.vertices()[v];
    let n = mesh.vertex_normals()[v];
    let frame = tangent_frame(&n);
    let scale = mesh.local_spacing(v);
    let mut a = DMatrix::zeros(ring.len(), 5);
    let mut b = DVector::zeros(ring.len());
    for (row, &w) in ring.iter().enumerate() {
        let d = (mesh.vertices()[w] - x) / scale;
        let (s, t, z) = (d.dot(&frame[0]), d.dot(&frame[1]), d.dot(&n));
        a[(row, 0)] = 0.5 * s * s;
        a[(row, 1)] = s * t;
        a[(row, 2)] = 0.5 * t * t;
        a[(row, 3)] = s;
        a[(row, 4)] = t;
        b[row] = z;
    }
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|_| Error::InsufficientNeighborhood { vertex: v, found: ring.len(), required: MIN_FIT_NEIGHBORS })?;
    if coef.iter().any(|c| !c.is_finite()) {
        return Err(Error::InsufficientNeighborhood { vertex: v, found: ring.len(), required: MIN_FIT_NEIGHBORS });
    }
    let hess = Matrix2::new(coef[0], coef[1], coef[1], coef[2]) / scale;
    let g = Vector2::new(coef[3], coef[4]);
    let second = -hess / (1.0 + g.norm_squared()).sqrt();
    let first = Matrix2::identity() + g * g.transpose();
    let inv_sqrt = inverse_sqrt_spd(&first);
    let th = inv_sqrt * second * inv_sqrt;
    let th = (th + th.transpose()) * 0.5;
    Ok((frame, th))
}

fn inverse_sqrt_spd(m: &Matrix2<f64>) -> Matrix2<f64> {
    let e = SymmetricEigen::new(*m);
    let d = Matrix2::from_diagonal(&e.eigenvalues.map(|l| 1.0 / l.sqrt()));
    e.eigenvectors * d * e.eigenvectors.transpose()
}

/// Tangential gradient of a vertex scalar by a least-squares linear fit over the 1-ring.
pub fn tangential_gradient(mesh: &SurfaceMesh, f: &[f64]) -> Result<Vec<Vec3>> {
    if f.len() != mesh.n_vertices() {
        return Err(Error::InvalidInput(format!(
            "expected {} vertex values, got {}",
            mesh.n_vertices(),
            f.len()
        )));
    }
    (0..mesh.n_vertices())
        .into_par_iter()
        .map(|v| {
            let ring = mesh.one_ring(v);
            if ring.len() < MIN_GRADIENT_NEIGHBORS {
                return Err(Error::InsufficientNeighborhood {
                    vertex: v,
                    found: ring.len(),
                    required: MIN_GRADIENT_NEIGHBORS,
                });
            }
            let x = mesh.vertices()[v];
            let n = mesh.vertex_normals()[v];
            let [t1, t2] = tangent_frame(&n);
            let mut ata = Matrix2::zeros();
            let mut atb = Vector2::zeros();
            for &w in ring {
                let d = mesh.vertices()[w] - x;
                let r = Vector2::new(d.dot(&t1), d.dot(&t2));
                ata += r * r.transpose();
                atb += r * (f[w] - f[v]);
            }
            let g = ata.try_inverse().ok_or(Error::InsufficientNeighborhood {
                vertex: v,
                found: ring.len(),
                required: MIN_GRADIENT_NEIGHBORS,
            })? * atb;
            let out = t1 * g[0] + t2 * g[1];
            Ok(out - n * n.dot(&out))
        })
        .collect()
}

/// Removes the normal component of each vertex vector.
pub fn project_tangential(mesh: &SurfaceMesh, v: &[Vec3]) -> Vec<Vec3> {
    v.iter()
        .zip(mesh.vertex_normals())
        .map(|(x, n)| x - n * n.dot(x))
        .collect()
}

/// Vertex-area quadrature `Σ f(v) · area(v)`.
pub fn boundary_integral(mesh: &SurfaceMesh, f: &[f64]) -> f64 {
    f.iter().zip(mesh.vertex_areas()).map(|(a, w)| a * w).sum()
}
