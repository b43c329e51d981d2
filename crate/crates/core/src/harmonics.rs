//! Polynomials in three variables and real solid harmonics up to degree four.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Highest solid-harmonic degree available.
pub const MAX_DEGREE: usize = 4;

/// Sparse polynomial in `(x, y, z)` stored as coefficient/exponent pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly3 {
    terms: Vec<(f64, [u32; 3])>,
}

impl Poly3 {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms(&[(c, [0, 0, 0])])
    }

    pub fn from_terms(terms: &[(f64, [u32; 3])]) -> Self {
        let mut p = Self { terms: terms.to_vec() };
        p.normalize();
        p
    }

    /// The coordinate function `x_axis`.
    pub fn coordinate(axis: usize) -> Self {
        let mut e = [0u32; 3];
        e[axis] = 1;
        Self::from_terms(&[(1.0, e)])
    }

    fn normalize(&mut self) {
        self.terms.sort_by(|a, b| a.1.cmp(&b.1));
        let mut merged: Vec<(f64, [u32; 3])> = Vec::with_capacity(self.terms.len());
        for &(c, e) in &self.terms {
            match merged.last_mut() {
                Some(last) if last.1 == e => last.0 += c,
                _ => merged.push((c, e)),
            }
        }
        merged.retain(|t| t.0 != 0.0);
        self.terms = merged;
    }

    pub fn terms(&self) -> &[(f64, [u32; 3])] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.1.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &Vector3<f64>) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32))
            .sum()
    }

    pub fn derivative(&self, axis: usize) -> Self {
        let terms: Vec<_> = self
            .terms
            .iter()
            .filter(|(_, e)| e[axis] > 0)
            .map(|&(c, mut e)| {
                let k = e[axis];
                e[axis] -= 1;
                (c * k as f64, e)
            })
            .collect();
        Self::from_terms(&terms)
    }

    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero();
        for a in 0..3 {
            out = out.add(&self.derivative(a).derivative(a));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::from_terms(&terms)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_terms(&self.terms.iter().map(|&(c, e)| (c * s, e)).collect::<Vec<_>>())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for &(a, ea) in &self.terms {
            for &(b, eb) in &other.terms {
                terms.push((a * b, [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]]));
            }
        }
        Self::from_terms(&terms)
    }

    pub fn gradient(&self) -> [Poly3; 3] {
        [self.derivative(0), self.derivative(1), self.derivative(2)]
    }

    pub fn eval_gradient(&self, x: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(
            self.derivative(0).eval(x),
            self.derivative(1).eval(x),
            self.derivative(2).eval(x),
        )
    }

    pub fn eval_hessian(&self, x: &Vector3<f64>) -> Matrix3<f64> {
        let mut h = Matrix3::zeros();
        for a in 0..3 {
            let da = self.derivative(a);
            for b in 0..3 {
                h[(a, b)] = da.derivative(b).eval(x);
            }
        }
        h
    }
}

fn mono(c: f64, e: [u32; 3]) -> (f64, [u32; 3]) {
    (c, e)
}

/// Number of independent real solid harmonics of degree `l`.
pub fn harmonic_count(l: usize) -> usize {
    2 * l + 1
}

/// Real solid harmonic of degree `l` and index `m` in `0..2l+1` (unnormalized).
pub fn solid_harmonic(l: usize, m: usize) -> Result<Poly3> {
    if l > MAX_DEGREE || m >= harmonic_count(l) {
        return Err(Error::InvalidInput(format!(
            "solid harmonic ({l}, {m}) unavailable; degree must be <= {MAX_DEGREE} and index < 2l+1"
        )));
    }
    let t: Vec<(f64, [u32; 3])> = match (l, m) {
        (0, 0) => vec![mono(1.0, [0, 0, 0])],
        (1, 0) => vec![mono(1.0, [0, 1, 0])],
        (1, 1) => vec![mono(1.0, [0, 0, 1])],
        (1, 2) => vec![mono(1.0, [1, 0, 0])],
        (2, 0) => vec![mono(1.0, [1, 1, 0])],
        (2, 1) => vec![mono(1.0, [0, 1, 1])],
        (2, 2) => vec![mono(2.0, [0, 0, 2]), mono(-1.0, [2, 0, 0]), mono(-1.0, [0, 2, 0])],
        (2, 3) => vec![mono(1.0, [1, 0, 1])],
        (2, 4) => vec![mono(1.0, [2, 0, 0]), mono(-1.0, [0, 2, 0])],
        // y(3x² − y²)
        (3, 0) => vec![mono(3.0, [2, 1, 0]), mono(-1.0, [0, 3, 0])],
        (3, 1) => vec![mono(1.0, [1, 1, 1])],
        // y(4z² − x² − y²)
        (3, 2) => vec![mono(4.0, [0, 1, 2]), mono(-1.0, [2, 1, 0]), mono(-1.0, [0, 3, 0])],
        // z(2z² − 3x² − 3y²)
        (3, 3) => vec![mono(2.0, [0, 0, 3]), mono(-3.0, [2, 0, 1]), mono(-3.0, [0, 2, 1])],
        // x(4z² − x² − y²)
        (3, 4) => vec![mono(4.0, [1, 0, 2]), mono(-1.0, [3, 0, 0]), mono(-1.0, [1, 2, 0])],
        // z(x² − y²)
        (3, 5) => vec![mono(1.0, [2, 0, 1]), mono(-1.0, [0, 2, 1])],
        // x(x² − 3y²)
        (3, 6) => vec![mono(1.0, [3, 0, 0]), mono(-3.0, [1, 2, 0])],
        // xy(x² − y²)
        (4, 0) => vec![mono(1.0, [3, 1, 0]), mono(-1.0, [1, 3, 0])],
        // yz(3x² − y²)
        (4, 1) => vec![mono(3.0, [2, 1, 1]), mono(-1.0, [0, 3, 1])],
        // xy(6z² − x² − y²)
        (4, 2) => vec![mono(6.0, [1, 1, 2]), mono(-1.0, [3, 1, 0]), mono(-1.0, [1, 3, 0])],
        // yz(4z² − 3x² − 3y²)
        (4, 3) => vec![mono(4.0, [0, 1, 3]), mono(-3.0, [2, 1, 1]), mono(-3.0, [0, 3, 1])],
        // 35z⁴ − 30z²r² + 3r⁴
        (4, 4) => {
            let r2 = Poly3::from_terms(&[(1.0, [2, 0, 0]), (1.0, [0, 2, 0]), (1.0, [0, 0, 2])]);
            let z2 = Poly3::from_terms(&[(1.0, [0, 0, 2])]);
            let p = z2
                .mul(&z2)
                .scale(35.0)
                .add(&z2.mul(&r2).scale(-30.0))
                .add(&r2.mul(&r2).scale(3.0));
            return Ok(p);
        }
        // xz(4z² − 3x² − 3y²)
        (4, 5) => vec![mono(4.0, [1, 0, 3]), mono(-3.0, [3, 0, 1]), mono(-3.0, [1, 2, 1])],
        // (x² − y²)(6z² − x² − y²)
        (4, 6) => {
            let a = Poly3::from_terms(&[(1.0, [2, 0, 0]), (-1.0, [0, 2, 0])]);
            let b = Poly3::from_terms(&[(6.0, [0, 0, 2]), (-1.0, [2, 0, 0]), (-1.0, [0, 2, 0])]);
            return Ok(a.mul(&b));
        }
        // xz(x² − 3y²)
        (4, 7) => vec![mono(1.0, [3, 0, 1]), mono(-3.0, [1, 2, 1])],
        // x⁴ − 6x²y² + y⁴
        (4, 8) => vec![mono(1.0, [4, 0, 0]), mono(-6.0, [2, 2, 0]), mono(1.0, [0, 4, 0])],
        _ => unreachable!(),
    };
    Ok(Poly3::from_terms(&t))
}

/// Weighted sum of solid harmonics, `Σ c · H_{l,m}`.
pub fn harmonic_mixture(coefficients: &[(usize, usize, f64)]) -> Result<Poly3> {
    let mut out = Poly3::zero();
    for &(l, m, c) in coefficients {
        out = out.add(&solid_harmonic(l, m)?.scale(c));
    }
    Ok(out)
}
