//! Numerical checks of the div–curl, trace, Poincaré and Bernstein inequalities and
//! of the boundary identity `Π∇²q Π = θ ∇_N q` for zero-trace `q`.

use serde::Serialize;

use super::{geometric_k, squared_norm};
use crate::error::Result;
use crate::fields::{gradient, hessian, normal_derivative, poisson_dirichlet, BoundaryData, Field, InteriorSampling};
use crate::geometry::{Mat3, Vec3};
use crate::potential::LayerOperator;

const BERNSTEIN_SAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityEntry {
    pub name: String,
    pub case: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub fitted_constant: f64,
    /// Set only for checks with an analytic constant.
    pub passed: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InequalityReport {
    pub entries: Vec<InequalityEntry>,
}

impl InequalityReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed != Some(false))
    }

    pub fn merge(&mut self, other: InequalityReport) {
        self.entries.extend(other.entries);
    }

    pub fn by_name<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a InequalityEntry> + 'a {
        self.entries.iter().filter(move |e| e.name == name)
    }
}

/// Everything the suite evaluates on one domain.
pub struct SuiteInputs<'a> {
    pub case: &'a str,
    pub sampling: &'a InteriorSampling,
    pub layer: &'a LayerOperator,
    /// Vector test field for the div–curl and trace inequalities.
    pub beta: &'a Field,
    /// Boundary traces whose harmonic extensions are checked against Bernstein.
    pub bernstein_traces: &'a [Vec<f64>],
    /// Relative slack for the Bernstein comparison.
    pub tolerance: f64,
}

fn entry(name: &str, case: &str, lhs: f64, rhs: f64, fitted: f64, passed: Option<bool>) -> InequalityEntry {
    let ratio = if rhs > 0.0 { lhs / rhs } else { f64::INFINITY };
    InequalityEntry { name: name.into(), case: case.into(), lhs, rhs, ratio, fitted_constant: fitted, passed }
}

/// `‖∇u‖_{L³}` with volume-fraction weights.
pub fn gradient_l3(s: &InteriorSampling, u: &Field) -> f64 {
    let g = gradient(s, u);
    s.integrate(&g, |m| squared_norm(m).powf(1.5)).cbrt()
}

pub fn inequality_suite(input: &SuiteInputs) -> Result<InequalityReport> {
    let s = input.sampling;
    let mesh = s.mesh();
    let case = input.case;
    let mut report = InequalityReport::default();

    // (a) |∇β| ≤ C (|div β| + |curl β| + |Π∇β|), pointwise over inside cells.
    let g = gradient(s, input.beta);
    let scale = s.sup_inside(&g, |m| squared_norm(m).sqrt());
    let mut worst = (0.0, 0.0, 0.0);
    for &c in s.inside_cells() {
        let m = Mat3::from_fn(|a, b| g.get(c, b * 3 + a));
        let lhs = m.norm();
        let div = m.trace();
        let curl = Vec3::new(m[(1, 2)] - m[(2, 1)], m[(2, 0)] - m[(0, 2)], m[(0, 1)] - m[(1, 0)]);
        let rhs = div.abs() + curl.norm() + (s.projector(c) * m).norm();
        if rhs > 1e-9 * scale && lhs / rhs > worst.2 {
            worst = (lhs, rhs, lhs / rhs);
        }
    }
    report.entries.push(entry("div_curl", case, worst.0, worst.1, worst.2, None));

    // (b) ‖β‖²_{L²(∂)} ≤ C (‖∇β‖² + K‖β‖²).
    let mut boundary = 0.0;
    for (v, x) in mesh.vertices().iter().enumerate() {
        if let Some(b) = s.interpolate_quadratic(input.beta, x) {
            boundary += mesh.vertex_areas()[v] * squared_norm(&b);
        }
    }
    let rhs = s.integrate(&g, squared_norm) + geometric_k(s) * s.integrate(input.beta, squared_norm);
    report.entries.push(entry("trace", case, boundary, rhs, boundary / rhs, None));

    // (c) Poincaré pair for the zero-trace solution of Δq = 6.
    let source = s.sample(1, |_| vec![6.0]);
    let q = poisson_dirichlet(s, &source, BoundaryData::Zero)?.field;
    let gq = gradient(s, &q);
    let vol = s.volume();
    let q_l2 = s.integrate(&q, squared_norm).sqrt();
    let gq_l2 = s.integrate(&gq, squared_norm).sqrt();
    let lap_l2 = s.integrate(&source, squared_norm).sqrt();
    let rhs = vol.cbrt() * gq_l2;
    report.entries.push(entry("poincare", case, q_l2, rhs, q_l2 / rhs, None));
    let rhs = vol.powf(1.0 / 6.0) * lap_l2;
    report.entries.push(entry("poincare_gradient", case, gq_l2, rhs, gq_l2 / rhs, None));

    // (d) Bernstein: interior gradient sup against boundary gradient sup.
    let depth = 2.0 * mesh.mean_edge_length();
    let deep: Vec<Vec3> = s
        .inside_cells()
        .iter()
        .filter(|&&c| -s.phi()[c] >= depth)
        .map(|&c| s.grid().position(c))
        .collect();
    let stride = (deep.len() / BERNSTEIN_SAMPLES).max(1);
    let samples: Vec<Vec3> = deep.iter().step_by(stride).copied().collect();
    for (i, psi) in input.bernstein_traces.iter().enumerate() {
        let (interior, boundary) = input.layer.bernstein_gap(psi, &samples)?;
        let passed = interior <= (1.0 + input.tolerance) * boundary;
        let mut e = entry("bernstein", &format!("{case}#{i}"), interior, boundary, interior / boundary, Some(passed));
        e.fitted_constant = e.ratio;
        report.entries.push(e);
    }

    // (e) Π∇²q Π − θ ∇_N q on the boundary.
    let hq = hessian(s, &q)?;
    let dn = normal_derivative(s, &q, &vec![0.0; mesh.n_vertices()])?;
    let curvature = s.curvature();
    let mut residual = 0.0f64;
    let mut reference = 0.0f64;
    for (v, x) in mesh.vertices().iter().enumerate() {
        let Some(h) = s.interpolate_quadratic(&hq, x) else { continue };
        let n = mesh.vertex_normals()[v];
        let pi = Mat3::identity() - n * n.transpose();
        let hm = Mat3::from_row_slice(&h);
        let theta = curvature.ambient(v) * dn[v];
        residual = residual.max((pi * hm * pi - theta).norm());
        reference = reference.max(theta.norm());
    }
    report.entries.push(entry("boundary_identity", case, residual, reference, residual / reference, None));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::build_sampling;
    use crate::geometry::shapes::icosphere;
    use crate::potential::assemble;

    #[test]
    fn unit_ball_suite() {
        let mesh = icosphere(3, 1.0).unwrap();
        let s = build_sampling(&mesh, 0.1).unwrap();
        let layer = assemble(&mesh).unwrap();
        let beta = s.sample(3, |x| vec![x.y * x.z, x.x * x.z, x.x * x.y]);
        let traces = vec![mesh.vertices().iter().map(|v| v.x * v.y + 0.5 * v.z).collect::<Vec<_>>()];
        let report = inequality_suite(&SuiteInputs {
            case: "ball",
            sampling: &s,
            layer: &layer,
            beta: &beta,
            bernstein_traces: &traces,
            tolerance: 0.05,
        })
        .unwrap();
        assert!(report.all_passed());
        assert!(report.entries.iter().all(|e| e.ratio.is_finite()));
        let dc = report.by_name("div_curl").next().unwrap();
        assert!(dc.fitted_constant <= 2.0, "{dc:?}");
        let id = report.by_name("boundary_identity").next().unwrap();
        assert!(id.ratio < 0.05, "{id:?}");
    }
}
