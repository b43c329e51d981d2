use super::{SurfaceMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint {
    pub face: usize,
    pub bary: [f64; 3],
    pub point: Vec3,
    pub distance: f64,
}

/// Closest point on triangle `abc` to `p`, returned with its barycentric weights.
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> (Vec3, [f64; 3]) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, [1.0, 0.0, 0.0]);
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, [0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [1.0 - v, v, 0.0]);
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, [0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}

/// Uniform bucket grid over the faces of a mesh for nearest-face queries.
#[derive(Debug, Clone)]
pub struct MeshLocator {
    origin: Vec3,
    cell: f64,
    dims: [usize; 3],
    buckets: Vec<Vec<usize>>,
    /// Chebyshev distance (in buckets) from each bucket to the nearest non-empty one.
    empty_rings: Vec<u32>,
    corners: Vec<[Vec3; 3]>,
    boxes: Vec<(Vec3, Vec3)>,
}

impl MeshLocator {
    pub fn new(mesh: &SurfaceMesh) -> Self {
        let (lo, hi) = mesh.bounding_box();
        let cell = (2.0 * mesh.mean_edge_length()).max(1e-9);
        let origin = lo - Vec3::repeat(0.5 * cell);
        let extent = hi - lo + Vec3::repeat(cell);
        let dims = [0, 1, 2].map(|a| ((extent[a] / cell).ceil() as usize).max(1));
        let mut buckets = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
        let v = mesh.vertices();
        let corners: Vec<[Vec3; 3]> =
            mesh.faces().iter().map(|f| [v[f[0]], v[f[1]], v[f[2]]]).collect();
        let boxes: Vec<(Vec3, Vec3)> = corners
            .iter()
            .map(|t| (t[0].inf(&t[1]).inf(&t[2]), t[0].sup(&t[1]).sup(&t[2])))
            .collect();
        for (fi, (tlo, thi)) in boxes.iter().enumerate() {
            let ilo = [0, 1, 2].map(|a| (((tlo[a] - origin[a]) / cell).floor() as isize).clamp(0, dims[a] as isize - 1) as usize);
            let ihi = [0, 1, 2].map(|a| (((thi[a] - origin[a]) / cell).floor() as isize).clamp(0, dims[a] as isize - 1) as usize);
            for i in ilo[0]..=ihi[0] {
                for j in ilo[1]..=ihi[1] {
                    for k in ilo[2]..=ihi[2] {
                        buckets[(i * dims[1] + j) * dims[2] + k].push(fi);
                    }
                }
            }
        }
        let empty_rings = chebyshev_transform(&buckets, dims);
        Self { origin, cell, dims, buckets, empty_rings, corners, boxes }
    }

    /// Nearest point on the surface to `p`. Ties resolve to the lowest face index.
    pub fn closest(&self, p: &Vec3) -> ClosestPoint {
        let d = self.dims.map(|x| x as isize);
        let q = [0, 1, 2].map(|a| ((p[a] - self.origin[a]) / self.cell).floor() as isize);
        // Buckets of the grid lying outside the query cube: rings before this are empty.
        let outside = (0..3).map(|a| (-q[a]).max(q[a] - d[a] + 1).max(0)).max().unwrap();
        let first = if outside == 0 {
            self.empty_rings[((q[0] * d[1] + q[1]) * d[2] + q[2]) as usize] as isize
        } else {
            outside
        };
        let max_ring = (0..3).map(|a| q[a].abs().max((q[a] - d[a] + 1).abs())).max().unwrap();
        let mut best = (f64::INFINITY, usize::MAX, Vec3::zeros(), [0.0; 3]);
        let mut ring = first;
        loop {
            self.scan_ring(p, q, ring, &mut best);
            if best.1 != usize::MAX {
                // Distance from p to the faces of the scanned cube.
                let reach = (0..3)
                    .map(|a| {
                        let lo = self.origin[a] + (q[a] - ring) as f64 * self.cell;
                        let hi = self.origin[a] + (q[a] + ring + 1) as f64 * self.cell;
                        (p[a] - lo).min(hi - p[a])
                    })
                    .fold(f64::INFINITY, f64::min);
                if best.0 <= reach * reach {
                    break;
                }
            }
            if ring >= max_ring {
                break;
            }
            ring += 1;
        }
        ClosestPoint { face: best.1, bary: best.3, point: best.2, distance: best.0.sqrt() }
    }

    fn scan_ring(&self, p: &Vec3, q: [isize; 3], ring: isize, best: &mut (f64, usize, Vec3, [f64; 3])) {
        let d = self.dims.map(|x| x as isize);
        let (k_lo, k_hi) = ((q[2] - ring).max(0), (q[2] + ring).min(d[2] - 1));
        for i in (q[0] - ring).max(0)..=(q[0] + ring).min(d[0] - 1) {
            for j in (q[1] - ring).max(0)..=(q[1] + ring).min(d[1] - 1) {
                let on_shell_ij = (i - q[0]).abs() == ring || (j - q[1]).abs() == ring;
                let step = if on_shell_ij || ring == 0 { 1 } else { 2 * ring };
                let mut k = if on_shell_ij { k_lo } else { q[2] - ring };
                while k <= k_hi {
                    if k >= 0 {
                        for &fi in &self.buckets[((i * d[1] + j) * d[2] + k) as usize] {
                            self.test_face(p, fi, best);
                        }
                    }
                    k += step;
                }
            }
        }
    }

    fn test_face(&self, p: &Vec3, fi: usize, best: &mut (f64, usize, Vec3, [f64; 3])) {
        let (lo, hi) = &self.boxes[fi];
        let gap = Vec3::from_fn(|a, _| (lo[a] - p[a]).max(p[a] - hi[a]).max(0.0));
        if gap.norm_squared() > best.0 {
            return;
        }
        let t = &self.corners[fi];
        let (pt, bary) = closest_point_on_triangle(p, &t[0], &t[1], &t[2]);
        let dist = (p - pt).norm_squared();
        if dist < best.0 || (dist == best.0 && fi < best.1) {
            *best = (dist, fi, pt, bary);
        }
    }
}

/// Per-bucket Chebyshev distance to the nearest non-empty bucket (separable passes).
fn chebyshev_transform(buckets: &[Vec<usize>], dims: [usize; 3]) -> Vec<u32> {
    let far = u32::MAX / 2;
    let mut dist: Vec<u32> = buckets.iter().map(|b| if b.is_empty() { far } else { 0 }).collect();
    let index = |i: usize, j: usize, k: usize| (i * dims[1] + j) * dims[2] + k;
    for axis in 0..3 {
        let (a, b) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for u in 0..dims[a] {
            for v in 0..dims[b] {
                let at = |t: usize| {
                    let mut c = [0; 3];
                    c[axis] = t;
                    c[a] = u;
                    c[b] = v;
                    index(c[0], c[1], c[2])
                };
                let line: Vec<u32> = (0..dims[axis]).map(|t| dist[at(t)]).collect();
                for t in 0..dims[axis] {
                    let mut m = line[t];
                    for (s, &val) in line.iter().enumerate() {
                        m = m.min(val.max(s.abs_diff(t) as u32));
                    }
                    dist[at(t)] = m;
                }
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::{ellipsoid, icosphere};

    fn brute(mesh: &SurfaceMesh, p: &Vec3) -> f64 {
        let v = mesh.vertices();
        mesh.faces()
            .iter()
            .map(|f| (p - closest_point_on_triangle(p, &v[f[0]], &v[f[1]], &v[f[2]]).0).norm())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn locator_matches_brute_force() {
        let mesh = ellipsoid([1.3, 0.8, 1.0], 3).unwrap();
        let loc = MeshLocator::new(&mesh);
        for i in 0..200 {
            let t = i as f64;
            let p = Vec3::new((0.37 * t).sin() * 2.0, (0.91 * t).cos() * 1.5, (0.13 * t + 1.0).sin() * 1.8);
            let c = loc.closest(&p);
            assert!((c.distance - brute(&mesh, &p)).abs() < 1e-14, "point {p:?}");
            let recon = mesh.vertices()[mesh.faces()[c.face][0]] * c.bary[0]
                + mesh.vertices()[mesh.faces()[c.face][1]] * c.bary[1]
                + mesh.vertices()[mesh.faces()[c.face][2]] * c.bary[2];
            assert!((recon - c.point).norm() < 1e-13);
        }
    }

    #[test]
    fn far_points_are_located() {
        let mesh = icosphere(2, 1.0).unwrap();
        let loc = MeshLocator::new(&mesh);
        let p = Vec3::new(10.0, -3.0, 4.0);
        assert!((loc.closest(&p).distance - brute(&mesh, &p)).abs() < 1e-13);
    }

    #[test]
    fn triangle_regions() {
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 0.0, 0.0);
        let c = Vec3::new(0.0, 1.0, 0.0);
        let (p, w) = closest_point_on_triangle(&Vec3::new(0.2, 0.2, 3.0), &a, &b, &c);
        assert!((p - Vec3::new(0.2, 0.2, 0.0)).norm() < 1e-15);
        assert!((w[0] - 0.6).abs() < 1e-15);
        let (p, _) = closest_point_on_triangle(&Vec3::new(-1.0, -1.0, 0.0), &a, &b, &c);
        assert_eq!(p, a);
        let (p, _) = closest_point_on_triangle(&Vec3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert!((p - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }
}
