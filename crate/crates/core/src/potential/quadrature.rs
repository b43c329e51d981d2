//! Triangle quadrature for the double-layer kernel against linear shape functions.

use std::f64::consts::PI;

use crate::geometry::Vec3;

const FAR_FACTOR: f64 = 20.0;
const NEAR_FACTOR: f64 = 3.0;
const MAX_DEPTH: u32 = 10;

/// Edge-midpoint rule, exact for quadratics.
const MIDPOINT_RULE: [([f64; 3], f64); 3] = [
    ([0.5, 0.5, 0.0], 1.0 / 3.0),
    ([0.0, 0.5, 0.5], 1.0 / 3.0),
    ([0.5, 0.0, 0.5], 1.0 / 3.0),
];

/// Dunavant six-point rule, exact for quartics.
const DUNAVANT6: [([f64; 3], f64); 6] = [
    ([0.108103018168070, 0.445948490915965, 0.445948490915965], 0.223381589678011),
    ([0.445948490915965, 0.108103018168070, 0.445948490915965], 0.223381589678011),
    ([0.445948490915965, 0.445948490915965, 0.108103018168070], 0.223381589678011),
    ([0.816847572980459, 0.091576213509771, 0.091576213509771], 0.109951743655322),
    ([0.091576213509771, 0.816847572980459, 0.091576213509771], 0.109951743655322),
    ([0.091576213509771, 0.091576213509771, 0.816847572980459], 0.109951743655322),
];

/// `∂/∂N_y (1 / 4π|x − y|)`.
#[inline]
pub fn double_layer_kernel(x: &Vec3, y: &Vec3, normal: &Vec3) -> f64 {
    let d = x - y;
    let r2 = d.norm_squared();
    d.dot(normal) / (4.0 * PI * r2 * r2.sqrt())
}

/// Flat triangle with its outward unit normal and area.
#[derive(Debug, Clone, Copy)]
pub struct Panel {
    pub corners: [Vec3; 3],
    pub normal: Vec3,
    pub area: f64,
    centroid: Vec3,
    radius: f64,
}

impl Panel {
    pub fn new(corners: [Vec3; 3]) -> Self {
        let cr = (corners[1] - corners[0]).cross(&(corners[2] - corners[0]));
        let area = 0.5 * cr.norm();
        let centroid = (corners[0] + corners[1] + corners[2]) / 3.0;
        let radius = corners.iter().map(|c| (c - centroid).norm()).fold(0.0, f64::max);
        Self { corners, normal: cr / (2.0 * area), area, centroid, radius }
    }

    /// `∫ K(x, y) λ_k(y) dS_y` for the three linear shape functions.
    pub fn weights(&self, x: &Vec3) -> [f64; 3] {
        let mut out = [0.0; 3];
        let root = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        self.accumulate(x, &root, self.area, 0, &mut out);
        out
    }

    fn point(&self, b: &[f64; 3]) -> Vec3 {
        self.corners[0] * b[0] + self.corners[1] * b[1] + self.corners[2] * b[2]
    }

    /// Integrates over the sub-triangle whose corners have parent barycentrics `sub`.
    fn accumulate(&self, x: &Vec3, sub: &[[f64; 3]; 3], area: f64, depth: u32, out: &mut [f64; 3]) {
        let centre = [0, 1, 2].map(|k| (sub[0][k] + sub[1][k] + sub[2][k]) / 3.0);
        let dist = (x - self.point(&centre)).norm();
        let radius = self.radius * (area / self.area).sqrt();
        if dist > FAR_FACTOR * radius {
            self.apply_rule(x, sub, area, &MIDPOINT_RULE, out);
        } else if dist > NEAR_FACTOR * radius || depth >= MAX_DEPTH {
            self.apply_rule(x, sub, area, &DUNAVANT6, out);
        } else {
            let mid = |a: &[f64; 3], b: &[f64; 3]| [0, 1, 2].map(|k| 0.5 * (a[k] + b[k]));
            let (m01, m12, m20) = (mid(&sub[0], &sub[1]), mid(&sub[1], &sub[2]), mid(&sub[2], &sub[0]));
            let q = 0.25 * area;
            self.accumulate(x, &[sub[0], m01, m20], q, depth + 1, out);
            self.accumulate(x, &[sub[1], m12, m01], q, depth + 1, out);
            self.accumulate(x, &[sub[2], m20, m12], q, depth + 1, out);
            self.accumulate(x, &[m01, m12, m20], q, depth + 1, out);
        }
    }

    fn apply_rule(&self, x: &Vec3, sub: &[[f64; 3]; 3], area: f64, rule: &[([f64; 3], f64)], out: &mut [f64; 3]) {
        for (b, w) in rule {
            let parent = [0, 1, 2].map(|k| b[0] * sub[0][k] + b[1] * sub[1][k] + b[2] * sub[2][k]);
            let k = double_layer_kernel(x, &self.point(&parent), &self.normal) * w * area;
            for i in 0..3 {
                out[i] += k * parent[i];
            }
        }
    }

    pub fn centroid(&self) -> Vec3 {
        self.centroid
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_polynomials_exactly() {
        // ∫_T λ1^a λ2^b dS / |T| = 2 a! b! / (a+b+2)!
        let exact = |a: i32, b: i32| {
            let f = |n: i32| (1..=n).map(f64::from).product::<f64>();
            2.0 * f(a) * f(b) / f(a + b + 2)
        };
        for (a, b) in [(0, 0), (1, 0), (2, 0), (1, 1), (3, 1), (2, 2), (4, 0)] {
            let q: f64 = DUNAVANT6.iter().map(|(p, w)| w * p[0].powi(a) * p[1].powi(b)).sum();
            assert!((q - exact(a, b)).abs() < 1e-12, "dunavant ({a},{b})");
            if a + b <= 2 {
                let q: f64 = MIDPOINT_RULE.iter().map(|(p, w)| w * p[0].powi(a) * p[1].powi(b)).sum();
                assert!((q - exact(a, b)).abs() < 1e-15, "midpoint ({a},{b})");
            }
        }
    }

    #[test]
    fn solid_angle_of_a_near_triangle() {
        // Right triangle with legs 1 viewed from above one corner's projection.
        let panel = Panel::new([Vec3::zeros(), Vec3::x(), Vec3::y()]);
        let x = Vec3::new(0.2, 0.2, -0.05);
        let w = panel.weights(&x);
        let total: f64 = w.iter().sum();
        // Solid angle via the Van Oosterom–Strackee formula.
        let (r1, r2, r3) = (panel.corners[0] - x, panel.corners[1] - x, panel.corners[2] - x);
        let (l1, l2, l3) = (r1.norm(), r2.norm(), r3.norm());
        let num = r1.dot(&r2.cross(&r3));
        let den = l1 * l2 * l3 + r1.dot(&r2) * l3 + r1.dot(&r3) * l2 + r2.dot(&r3) * l1;
        let omega = 2.0 * num.atan2(den);
        assert!((total + omega / (4.0 * PI)).abs() < 1e-6, "{total} vs {}", -omega / (4.0 * PI));
    }
}
