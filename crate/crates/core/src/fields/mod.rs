//! Cartesian sampling of the fluid domain and grid fields.
//!
//! Cell centres sit on the lattice `h·ℤ³`, so grids of equal spacing share
//! cells and fields transfer between them by global index. Cells are
//! classified from a signed distance that blends, over the nearest surface
//! triangle, the local osculating quadrics of its three vertices; this tracks
//! the smooth surface through the mesh vertices rather than the flat facets.

mod ops;
mod poisson;
mod pressure;
mod state;

pub use ops::{curl, divergence, extrapolate_band, gradient, hessian, laplacian, normal_derivative};
pub use poisson::{poisson_dirichlet, BoundaryData, PoissonSolution, SOLVER_TOLERANCE};
pub use pressure::{material_pressure_solve, pressure_solve, velocity_split, MaterialPressure, VelocitySplit};
pub(crate) use pressure::boundary_trace;
pub use state::FlowState;

use std::collections::VecDeque;

use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    injectivity_radius_with, second_fundamental_form, ClosestPoint, CurvatureData, Mat3, MeshLocator,
    SurfaceMesh, Vec3,
};

/// Minimum number of cells across twice the injectivity radius.
pub const MIN_CELLS_ACROSS: f64 = 10.0;
/// Width of the extrapolation band outside the domain, in cells.
pub const BAND_CELLS: f64 = 3.0;
/// Extra lattice layers around the surface bounding box.
pub const DEFAULT_MARGIN: i64 = 4;
const INJECTIVITY_CAP: f64 = 1e3;
const SMOOTH_DISTANCE_CELLS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Inside,
    Band,
    Outside,
}

/// Box of lattice cells `lo .. lo + dims` with centres at `index · h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub h: f64,
    pub lo: [i64; 3],
    pub dims: [usize; 3],
}

impl Grid {
    /// Smallest lattice box containing `[lo, hi]` padded by `margin` cells.
    pub fn covering(lo: &Vec3, hi: &Vec3, h: f64, margin: i64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("grid spacing must be positive, got {h}")));
        }
        let l = [0, 1, 2].map(|a| (lo[a] / h).floor() as i64 - margin);
        let u = [0, 1, 2].map(|a| (hi[a] / h).ceil() as i64 + margin);
        let dims = [0, 1, 2].map(|a| (u[a] - l[a] + 1) as usize);
        Ok(Self { h, lo: l, dims })
    }

    pub fn n_cells(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn coords(&self, cell: usize) -> [usize; 3] {
        let k = cell % self.dims[2];
        let j = (cell / self.dims[2]) % self.dims[1];
        let i = cell / (self.dims[1] * self.dims[2]);
        [i, j, k]
    }

    pub fn global(&self, cell: usize) -> [i64; 3] {
        let c = self.coords(cell);
        [0, 1, 2].map(|a| self.lo[a] + c[a] as i64)
    }

    pub fn cell_of_global(&self, g: [i64; 3]) -> Option<usize> {
        let mut c = [0usize; 3];
        for a in 0..3 {
            let off = g[a] - self.lo[a];
            if off < 0 || off >= self.dims[a] as i64 {
                return None;
            }
            c[a] = off as usize;
        }
        Some(self.index(c[0], c[1], c[2]))
    }

    #[inline]
    pub fn position(&self, cell: usize) -> Vec3 {
        let g = self.global(cell);
        Vec3::new(g[0] as f64, g[1] as f64, g[2] as f64) * self.h
    }

    /// Neighbour `offset` cells along `axis`, if inside the box.
    #[inline]
    pub fn neighbor(&self, cell: usize, axis: usize, offset: i64) -> Option<usize> {
        let mut c = self.coords(cell);
        let v = c[axis] as i64 + offset;
        if v < 0 || v >= self.dims[axis] as i64 {
            return None;
        }
        c[axis] = v as usize;
        Some(self.index(c[0], c[1], c[2]))
    }

    /// Continuous lattice coordinates of a point relative to this box.
    fn local_coords(&self, x: &Vec3) -> Vec3 {
        Vec3::new(
            x.x / self.h - self.lo[0] as f64,
            x.y / self.h - self.lo[1] as f64,
            x.z / self.h - self.lo[2] as f64,
        )
    }

    /// True when the padded box still holds `[lo, hi]` with `margin` spare cells.
    pub fn contains_with_margin(&self, lo: &Vec3, hi: &Vec3, margin: i64) -> bool {
        (0..3).all(|a| {
            let l = (lo[a] / self.h).floor() as i64 - margin;
            let u = (hi[a] / self.h).ceil() as i64 + margin;
            l >= self.lo[a] && u < self.lo[a] + self.dims[a] as i64
        })
    }
}

/// Boundary intersection of the grid line from an inside cell to an outside neighbour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub axis: usize,
    pub offset: i64,
    /// Fraction of the cell spacing from the cell centre to the boundary.
    pub theta: f64,
    pub point: Vec3,
    pub face: usize,
    pub bary: [f64; 3],
}

/// Grid cells clipped to the domain bounded by a surface mesh.
#[derive(Debug, Clone)]
pub struct InteriorSampling {
    grid: Grid,
    mesh: SurfaceMesh,
    curvature: CurvatureData,
    iota0: f64,
    phi: Vec<f64>,
    kind: Vec<CellKind>,
    nearest: Vec<ClosestPoint>,
    inside: Vec<usize>,
    compact: Vec<usize>,
    band: Vec<usize>,
    stencil_offsets: Vec<usize>,
    stencil_entries: Vec<(usize, f64)>,
    crossing_offsets: Vec<usize>,
    crossings: Vec<Crossing>,
    locator: MeshLocator,
}

/// Samples the domain on a lattice of spacing `h` around the mesh.
pub fn build_sampling(mesh: &SurfaceMesh, h: f64) -> Result<InteriorSampling> {
    let (lo, hi) = mesh.bounding_box();
    let grid = Grid::covering(&lo, &hi, h, DEFAULT_MARGIN)?;
    build_sampling_on(mesh, grid)
}

/// Samples the domain on a prescribed lattice box.
pub fn build_sampling_on(mesh: &SurfaceMesh, grid: Grid) -> Result<InteriorSampling> {
    let curvature = second_fundamental_form(mesh)?;
    let iota0 = injectivity_radius_with(mesh, &curvature, INJECTIVITY_CAP)?;
    build_sampling_with(mesh, grid, curvature, iota0)
}

/// Samples with precomputed curvature and injectivity radius.
pub fn build_sampling_with(
    mesh: &SurfaceMesh,
    grid: Grid,
    curvature: CurvatureData,
    iota0: f64,
) -> Result<InteriorSampling> {
    let h = grid.h;
    let cells_across = 2.0 * iota0 / h;
    if cells_across < MIN_CELLS_ACROSS {
        return Err(Error::ResolutionTooCoarse { cells_across });
    }
    let (lo, hi) = mesh.bounding_box();
    if !grid.contains_with_margin(&lo, &hi, BAND_CELLS.ceil() as i64) {
        return Err(Error::InvalidInput("grid does not cover the surface and its band".into()));
    }
    let locator = MeshLocator::new(mesh);
    let shape: Vec<Mat3> = (0..mesh.n_vertices()).map(|v| curvature.ambient(v)).collect();

    let samples: Vec<(f64, ClosestPoint)> = (0..grid.n_cells())
        .into_par_iter()
        .map(|cell| {
            let x = grid.position(cell);
            let near = locator.closest(&x);
            let smooth = smooth_distance(mesh, &shape, &x, &near);
            let phi = if near.distance > SMOOTH_DISTANCE_CELLS * h {
                near.distance.copysign(smooth)
            } else {
                smooth
            };
            (phi, near)
        })
        .collect();
    let (phi, nearest): (Vec<f64>, Vec<ClosestPoint>) = samples.into_iter().unzip();

    let band_width = BAND_CELLS * h;
    let kind: Vec<CellKind> = phi
        .iter()
        .map(|&p| {
            if p < 0.0 {
                CellKind::Inside
            } else if p <= band_width {
                CellKind::Band
            } else {
                CellKind::Outside
            }
        })
        .collect();
    let inside: Vec<usize> = (0..grid.n_cells()).filter(|&c| kind[c] == CellKind::Inside).collect();
    if inside.is_empty() {
        return Err(Error::ResolutionTooCoarse { cells_across });
    }
    let mut compact = vec![usize::MAX; grid.n_cells()];
    for (k, &c) in inside.iter().enumerate() {
        compact[c] = k;
    }
    check_connected(&grid, &inside, &compact, cells_across)?;
    let band: Vec<usize> = (0..grid.n_cells()).filter(|&c| kind[c] == CellKind::Band).collect();

    let stencils: Vec<Vec<(usize, f64)>> = band
        .par_iter()
        .map(|&b| extrapolation_stencil(&grid, &kind, b))
        .collect::<Result<_>>()?;
    let mut stencil_offsets = Vec::with_capacity(band.len() + 1);
    let mut stencil_entries = Vec::new();
    stencil_offsets.push(0);
    for s in stencils {
        stencil_entries.extend(s);
        stencil_offsets.push(stencil_entries.len());
    }

    let per_cell: Vec<Vec<Crossing>> = inside
        .par_iter()
        .map(|&c| {
            let mut out = Vec::new();
            for axis in 0..3 {
                for offset in [-1i64, 1] {
                    let nb = grid.neighbor(c, axis, offset).expect("inside cells are padded by the band");
                    if kind[nb] == CellKind::Inside {
                        continue;
                    }
                    let theta = (phi[c] / (phi[c] - phi[nb])).clamp(1e-3, 1.0);
                    let mut point = grid.position(c);
                    point[axis] += offset as f64 * theta * h;
                    let near = locator.closest(&point);
                    out.push(Crossing { axis, offset, theta, point, face: near.face, bary: near.bary });
                }
            }
            out
        })
        .collect();
    let mut crossing_offsets = Vec::with_capacity(inside.len() + 1);
    let mut crossings = Vec::new();
    crossing_offsets.push(0);
    for c in per_cell {
        crossings.extend(c);
        crossing_offsets.push(crossings.len());
    }

    Ok(InteriorSampling {
        grid,
        mesh: mesh.clone(),
        curvature,
        iota0,
        phi,
        kind,
        nearest,
        inside,
        compact,
        band,
        stencil_offsets,
        stencil_entries,
        crossing_offsets,
        crossings,
        locator,
    })
}

/// Barycentric blend of the vertex quadric distances `(x − p)·N + ½θ(u, u)`.
fn smooth_distance(mesh: &SurfaceMesh, shape: &[Mat3], x: &Vec3, near: &ClosestPoint) -> f64 {
    let f = mesh.faces()[near.face];
    let mut d = 0.0;
    for k in 0..3 {
        let v = f[k];
        let n = mesh.vertex_normals()[v];
        let r = x - mesh.vertices()[v];
        let normal = r.dot(&n);
        let u = r - n * normal;
        d += near.bary[k] * (normal + 0.5 * u.dot(&(shape[v] * u)));
    }
    d
}

fn check_connected(grid: &Grid, inside: &[usize], compact: &[usize], cells_across: f64) -> Result<()> {
    let mut seen = vec![false; inside.len()];
    let mut queue = VecDeque::from([inside[0]]);
    seen[0] = true;
    let mut count = 1;
    while let Some(c) = queue.pop_front() {
        for axis in 0..3 {
            for off in [-1, 1] {
                if let Some(nb) = grid.neighbor(c, axis, off) {
                    let k = compact[nb];
                    if k != usize::MAX && !seen[k] {
                        seen[k] = true;
                        count += 1;
                        queue.push_back(nb);
                    }
                }
            }
        }
    }
    if count != inside.len() {
        return Err(Error::ResolutionTooCoarse { cells_across });
    }
    Ok(())
}

/// Weighted least-squares linear fit from nearby inside cells, evaluated at `cell`.
fn extrapolation_stencil(grid: &Grid, kind: &[CellKind], cell: usize) -> Result<Vec<(usize, f64)>> {
    let c = grid.coords(cell);
    for radius in [2i64, 3, 4, 5, 6] {
        let mut pts: Vec<(usize, Vector4<f64>, f64)> = Vec::new();
        for di in -radius..=radius {
            for dj in -radius..=radius {
                for dk in -radius..=radius {
                    let q = [c[0] as i64 + di, c[1] as i64 + dj, c[2] as i64 + dk];
                    if (0..3).any(|a| q[a] < 0 || q[a] >= grid.dims[a] as i64) {
                        continue;
                    }
                    let nb = grid.index(q[0] as usize, q[1] as usize, q[2] as usize);
                    if kind[nb] != CellKind::Inside {
                        continue;
                    }
                    let d = Vector4::new(1.0, di as f64, dj as f64, dk as f64);
                    let w = 1.0 / (1.0 + (di * di + dj * dj + dk * dk) as f64);
                    pts.push((nb, d, w));
                }
            }
        }
        if pts.len() < 8 {
            continue;
        }
        let mut normal = Matrix4::zeros();
        for (_, d, w) in &pts {
            normal += d * d.transpose() * *w;
        }
        let eig = normal.symmetric_eigenvalues();
        if eig.min() < 1e-6 * eig.max() {
            continue;
        }
        let inv = match normal.try_inverse() {
            Some(m) => m,
            None => continue,
        };
        let row = inv.row(0).transpose();
        return Ok(pts.iter().map(|(nb, d, w)| (*nb, w * row.dot(d))).collect());
    }
    Err(Error::ResolutionTooCoarse { cells_across: 0.0 })
}

impl InteriorSampling {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.grid.h
    }

    pub fn mesh(&self) -> &SurfaceMesh {
        &self.mesh
    }

    pub fn curvature(&self) -> &CurvatureData {
        &self.curvature
    }

    pub fn iota0(&self) -> f64 {
        self.iota0
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn kind(&self, cell: usize) -> CellKind {
        self.kind[cell]
    }

    pub fn is_inside(&self, cell: usize) -> bool {
        self.kind[cell] == CellKind::Inside
    }

    pub fn is_valid(&self, cell: usize) -> bool {
        self.kind[cell] != CellKind::Outside
    }

    pub fn inside_cells(&self) -> &[usize] {
        &self.inside
    }

    pub fn band_cells(&self) -> &[usize] {
        &self.band
    }

    /// Position of `cell` in the list of inside cells.
    pub fn compact_index(&self, cell: usize) -> Option<usize> {
        let k = self.compact[cell];
        (k != usize::MAX).then_some(k)
    }

    pub fn nearest(&self, cell: usize) -> &ClosestPoint {
        &self.nearest[cell]
    }

    /// Interpolated surface normal at the nearest boundary point of `cell`.
    pub fn nearest_normal(&self, cell: usize) -> Vec3 {
        let n = &self.nearest[cell];
        self.mesh.interpolated_normal(n.face, &n.bary)
    }

    pub fn locator(&self) -> &MeshLocator {
        &self.locator
    }

    pub(crate) fn stencil(&self, band_index: usize) -> &[(usize, f64)] {
        &self.stencil_entries[self.stencil_offsets[band_index]..self.stencil_offsets[band_index + 1]]
    }

    /// Boundary crossings of the grid lines leaving the `k`-th inside cell.
    pub fn crossings(&self, k: usize) -> &[Crossing] {
        &self.crossings[self.crossing_offsets[k]..self.crossing_offsets[k + 1]]
    }

    pub fn all_crossings(&self) -> &[Crossing] {
        &self.crossings
    }

    /// Quadrature weight of a cell: its volume fraction inside the domain times `h³`.
    pub fn cell_weight(&self, cell: usize) -> f64 {
        if self.kind[cell] == CellKind::Outside {
            return 0.0;
        }
        let n = self.nearest_normal(cell);
        let l1 = n.x.abs() + n.y.abs() + n.z.abs();
        let frac = (0.5 - self.phi[cell] / (self.grid.h * l1)).clamp(0.0, 1.0);
        frac * self.grid.h.powi(3)
    }

    /// Cells with positive quadrature weight, in grid order.
    pub fn quadrature_cells(&self) -> Vec<(usize, f64)> {
        (0..self.grid.n_cells())
            .filter_map(|c| {
                let w = self.cell_weight(c);
                (w > 0.0).then_some((c, w))
            })
            .collect()
    }

    /// Inside cells whose whole `(2r+1)³` neighbourhood is inside.
    pub fn deep_cells(&self, r: i64) -> Vec<usize> {
        self.inside
            .iter()
            .copied()
            .filter(|&c| {
                let q = self.grid.coords(c);
                (-r..=r).all(|di| {
                    (-r..=r).all(|dj| {
                        (-r..=r).all(|dk| {
                            let g = [q[0] as i64 + di, q[1] as i64 + dj, q[2] as i64 + dk];
                            (0..3).all(|a| g[a] >= 0 && g[a] < self.grid.dims[a] as i64)
                                && self.is_inside(self.grid.index(g[0] as usize, g[1] as usize, g[2] as usize))
                        })
                    })
                })
            })
            .collect()
    }

    /// Trilinear interpolation of a field at `x`; `None` if any corner cell is not valid.
    pub fn interpolate(&self, field: &Field, x: &Vec3) -> Option<Vec<f64>> {
        let q = self.grid.local_coords(x);
        let base = [0, 1, 2].map(|a| q[a].floor() as i64);
        let t = [0, 1, 2].map(|a| q[a] - base[a] as f64);
        let mut out = vec![0.0; field.ncomp];
        for corner in 0..8 {
            let o = [corner >> 2 & 1, corner >> 1 & 1, corner & 1];
            let g = [0, 1, 2].map(|a| base[a] + o[a] as i64);
            if (0..3).any(|a| g[a] < 0 || g[a] >= self.grid.dims[a] as i64) {
                return None;
            }
            let cell = self.grid.index(g[0] as usize, g[1] as usize, g[2] as usize);
            if !self.is_valid(cell) {
                return None;
            }
            let w: f64 = (0..3).map(|a| if o[a] == 1 { t[a] } else { 1.0 - t[a] }).product();
            if w == 0.0 {
                continue;
            }
            for (c, v) in out.iter_mut().enumerate() {
                *v += w * field.get(cell, c);
            }
        }
        Some(out)
    }

    /// Triquadratic interpolation over the 27 cells around the nearest cell centre.
    pub fn interpolate_quadratic(&self, field: &Field, x: &Vec3) -> Option<Vec<f64>> {
        let q = self.grid.local_coords(x);
        let base = [0, 1, 2].map(|a| q[a].round() as i64);
        let lagrange = |t: f64| [0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)];
        let w = [0, 1, 2].map(|a| lagrange(q[a] - base[a] as f64));
        let mut out = vec![0.0; field.ncomp];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let g = [base[0] + i as i64 - 1, base[1] + j as i64 - 1, base[2] + k as i64 - 1];
                    if (0..3).any(|a| g[a] < 0 || g[a] >= self.grid.dims[a] as i64) {
                        return None;
                    }
                    let cell = self.grid.index(g[0] as usize, g[1] as usize, g[2] as usize);
                    if !self.is_valid(cell) {
                        return None;
                    }
                    let wt = w[0][i] * w[1][j] * w[2][k];
                    for (c, v) in out.iter_mut().enumerate() {
                        *v += wt * field.get(cell, c);
                    }
                }
            }
        }
        Some(out)
    }

    /// Samples a function at every valid cell.
    pub fn sample(&self, ncomp: usize, f: impl Fn(&Vec3) -> Vec<f64> + Sync) -> Field {
        let mut field = Field::invalid(self.grid.n_cells(), ncomp);
        let values: Vec<(usize, Vec<f64>)> = (0..self.grid.n_cells())
            .into_par_iter()
            .filter(|&c| self.is_valid(c))
            .map(|c| (c, f(&self.grid.position(c))))
            .collect();
        for (c, v) in values {
            field.set_cell(c, &v);
        }
        field
    }

    /// Integral of `f(values)` over the domain with volume-fraction weights.
    pub fn integrate(&self, field: &Field, f: impl Fn(&[f64]) -> f64) -> f64 {
        let mut acc = 0.0;
        for c in 0..self.grid.n_cells() {
            let w = self.cell_weight(c);
            if w > 0.0 {
                acc += w * f(field.cell(c));
            }
        }
        acc
    }

    /// Largest `f(values)` over inside cells.
    pub fn sup_inside(&self, field: &Field, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.inside.iter().map(|&c| f(field.cell(c))).fold(0.0, f64::max)
    }

    pub fn volume(&self) -> f64 {
        (0..self.grid.n_cells()).map(|c| self.cell_weight(c)).sum()
    }

    /// Projector `δ − φ N⊗N` at a cell, with `φ` the smoothstep cutoff on depth.
    pub fn projector(&self, cell: usize) -> Mat3 {
        let n = self.nearest_normal(cell);
        let phi = cutoff(-self.phi[cell], self.iota0);
        Mat3::identity() - n * n.transpose() * phi
    }
}

/// Smoothstep cutoff: 1 within `iota0/4` of the boundary, 0 beyond `iota0/2`.
pub fn cutoff(depth: f64, iota0: f64) -> f64 {
    let t = ((depth - 0.25 * iota0) / (0.25 * iota0)).clamp(0.0, 1.0);
    1.0 - t * t * (3.0 - 2.0 * t)
}

/// Multi-component values on every cell of a grid; non-valid cells hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub ncomp: usize,
    pub data: Vec<f64>,
}

impl Field {
    pub fn invalid(n_cells: usize, ncomp: usize) -> Self {
        Self { ncomp, data: vec![f64::NAN; n_cells * ncomp] }
    }

    pub fn zeros_on(sampling: &InteriorSampling, ncomp: usize) -> Self {
        sampling.sample(ncomp, |_| vec![0.0; ncomp])
    }

    #[inline]
    pub fn get(&self, cell: usize, c: usize) -> f64 {
        self.data[cell * self.ncomp + c]
    }

    #[inline]
    pub fn set(&mut self, cell: usize, c: usize, v: f64) {
        self.data[cell * self.ncomp + c] = v;
    }

    #[inline]
    pub fn cell(&self, cell: usize) -> &[f64] {
        &self.data[cell * self.ncomp..(cell + 1) * self.ncomp]
    }

    pub fn set_cell(&mut self, cell: usize, v: &[f64]) {
        self.data[cell * self.ncomp..(cell + 1) * self.ncomp].copy_from_slice(v);
    }

    pub fn vec3(&self, cell: usize) -> Vec3 {
        Vec3::new(self.get(cell, 0), self.get(cell, 1), self.get(cell, 2))
    }

    /// Single component as a scalar field.
    pub fn component(&self, c: usize) -> Field {
        Field { ncomp: 1, data: self.data.iter().skip(c).step_by(self.ncomp).copied().collect() }
    }

    /// Interleaves scalar fields into one multi-component field.
    pub fn stack(parts: &[Field]) -> Field {
        let n = parts[0].data.len() / parts[0].ncomp;
        let ncomp: usize = parts.iter().map(|p| p.ncomp).sum();
        let mut data = Vec::with_capacity(n * ncomp);
        for cell in 0..n {
            for p in parts {
                data.extend_from_slice(p.cell(cell));
            }
        }
        Field { ncomp, data }
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field { ncomp: self.ncomp, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// `self + s · other`, elementwise.
    pub fn axpy(&self, s: f64, other: &Field) -> Field {
        Field {
            ncomp: self.ncomp,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{closest_point_on_triangle, shapes::icosphere};
    use std::f64::consts::PI;

    #[test]
    fn ball_volume_and_centre_distance() {
        let mesh = icosphere(4, 1.0).unwrap();
        let s = build_sampling(&mesh, 0.05).unwrap();
        let count = s.inside_cells().len() as f64 * 0.05f64.powi(3);
        let ball = 4.0 * PI / 3.0;
        assert!((count - ball).abs() / ball < 0.01, "{count}");
        assert!((s.volume() - ball).abs() / ball < 0.005, "{}", s.volume());
        let centre = s.grid().cell_of_global([0, 0, 0]).unwrap();
        assert!((s.phi()[centre] + 1.0).abs() < 0.05f64.powi(2));
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let mesh = icosphere(3, 1.0).unwrap();
        assert!(matches!(build_sampling(&mesh, 0.5), Err(Error::ResolutionTooCoarse { .. })));
    }

    #[test]
    fn band_distance_matches_brute_force() {
        let mesh = icosphere(4, 1.0).unwrap();
        let h = 0.05;
        let s = build_sampling(&mesh, h).unwrap();
        let v = mesh.vertices();
        let band = s.band_cells();
        for k in 0..100 {
            let cell = band[(k * 7919) % band.len()];
            let x = s.grid().position(cell);
            let brute = mesh
                .faces()
                .iter()
                .map(|f| (x - closest_point_on_triangle(&x, &v[f[0]], &v[f[1]], &v[f[2]]).0).norm())
                .fold(f64::INFINITY, f64::min);
            assert!((s.phi()[cell] - brute).abs() < h * h / 2.0, "cell {cell}");
        }
    }

    #[test]
    fn extrapolation_is_exact_for_linear_fields() {
        let mesh = icosphere(3, 1.0).unwrap();
        let s = build_sampling(&mesh, 0.1).unwrap();
        let mut f = Field::invalid(s.grid().n_cells(), 1);
        for &c in s.inside_cells() {
            let x = s.grid().position(c);
            f.set(c, 0, 2.0 * x.x - x.y + 0.5 * x.z + 3.0);
        }
        extrapolate_band(&s, &mut f);
        for &c in s.band_cells() {
            let x = s.grid().position(c);
            assert!((f.get(c, 0) - (2.0 * x.x - x.y + 0.5 * x.z + 3.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn cutoff_profile() {
        assert_eq!(cutoff(0.0, 1.0), 1.0);
        assert_eq!(cutoff(0.25, 1.0), 1.0);
        assert_eq!(cutoff(0.5, 1.0), 0.0);
        assert!((cutoff(0.375, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn trilinear_interpolation_reproduces_linear_fields() {
        let mesh = icosphere(3, 1.0).unwrap();
        let s = build_sampling(&mesh, 0.1).unwrap();
        let f = s.sample(1, |x| vec![x.x - 2.0 * x.z]);
        for v in mesh.vertices() {
            let val = s.interpolate(&f, v).unwrap()[0];
            assert!((val - (v.x - 2.0 * v.z)).abs() < 1e-12);
        }
    }
}
