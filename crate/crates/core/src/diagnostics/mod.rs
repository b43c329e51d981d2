//! Continuation monitors, energies and the analytic inequality checks.

mod inequalities;
mod record;

pub use inequalities::{inequality_suite, gradient_l3, InequalityEntry, InequalityReport, SuiteInputs};
pub use record::{parse_csv, write_csv, DiagnosticsRecord, CSV_HEADER};

use crate::error::{Error, Result};
use crate::fields::{gradient, normal_derivative, Field, FlowState, InteriorSampling, VelocitySplit};
use crate::geometry::{tangential_gradient, Mat3, Vec3};
use crate::potential::LayerOperator;

/// Normal derivatives below this make the Taylor weight undefined.
pub const TAYLOR_FLOOR: f64 = 1e-12;

/// `max(0, ln q)`.
pub fn log_plus(q: f64) -> f64 {
    if q > 1.0 {
        q.ln()
    } else {
        0.0
    }
}

/// Outward normal derivative of a pressure with zero boundary values.
pub fn pressure_normal_derivative(s: &InteriorSampling, p: &Field) -> Result<Vec<f64>> {
    normal_derivative(s, p, &vec![0.0; s.mesh().n_vertices()])
}

/// `min_∂ (−∇_N p)`.
pub fn taylor_sign_margin(s: &InteriorSampling, p: &Field) -> Result<f64> {
    let dn = pressure_normal_derivative(s, p)?;
    Ok(dn.iter().map(|v| -v).fold(f64::INFINITY, f64::min))
}

/// Purely geometric part of `𝒦`: `θ_sup + 1/ι₀`.
pub fn geometric_k(s: &InteriorSampling) -> f64 {
    s.curvature().theta_sup + 1.0 / s.iota0()
}

/// `𝒦 = θ_sup + 1/ι₀ + sup_∂ 1/|∇_N p|`.
pub fn compute_k(s: &InteriorSampling, p: &Field) -> Result<f64> {
    let dn = pressure_normal_derivative(s, p)?;
    let mut worst = 0.0f64;
    for (v, d) in dn.iter().enumerate() {
        if d.abs() < TAYLOR_FLOOR {
            return Err(Error::TaylorDegenerate { vertex: v, gradient: d.abs() });
        }
        worst = worst.max(1.0 / d.abs());
    }
    Ok(geometric_k(s) + worst)
}

/// Full velocity gradient `G_ab = ∂_a u_b` at each vertex: tangential derivatives of
/// the boundary velocity plus the normal derivative from the grid.
pub fn boundary_velocity_gradient(state: &FlowState) -> Result<Vec<Mat3>> {
    let s = &state.sampling;
    let mesh = s.mesh();
    let trace = state.boundary_velocity()?;
    let mut out = vec![Mat3::zeros(); mesh.n_vertices()];
    for b in 0..3 {
        let ub: Vec<f64> = trace.iter().map(|v| v[b]).collect();
        let tang = tangential_gradient(mesh, &ub)?;
        let dn = normal_derivative(s, &state.velocity.component(b), &ub)?;
        for v in 0..mesh.n_vertices() {
            let n = mesh.vertex_normals()[v];
            for a in 0..3 {
                out[v][(a, b)] = tang[v][a] + n[a] * dn[v];
            }
        }
    }
    Ok(out)
}

/// Componentwise Dirichlet-to-Neumann map of the boundary velocity.
pub fn dtn_of_boundary_velocity(state: &FlowState, layer: &LayerOperator) -> Result<Vec<Vec3>> {
    let trace = state.boundary_velocity()?;
    let mut out = vec![Vec3::zeros(); trace.len()];
    for b in 0..3 {
        let ub: Vec<f64> = trace.iter().map(|v| v[b]).collect();
        for (o, d) in out.iter_mut().zip(layer.dtn(&ub)?) {
            o[b] = d;
        }
    }
    Ok(out)
}

/// `𝒜 = ‖ω‖_∞ + ‖∇u‖_{∞,∂} + ‖𝒩U‖_{∞,∂}`.
pub fn compute_a(state: &FlowState, layer: &LayerOperator) -> Result<f64> {
    check_layer(state, layer)?;
    let s = &state.sampling;
    let omega = s.sup_inside(&state.vorticity, |w| (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt());
    let grad = boundary_velocity_gradient(state)?.iter().map(|g| g.norm()).fold(0.0, f64::max);
    let dtn = dtn_of_boundary_velocity(state, layer)?.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(omega + grad + dtn)
}

fn check_layer(state: &FlowState, layer: &LayerOperator) -> Result<()> {
    if layer.mesh().vertices() != state.mesh().vertices() {
        return Err(Error::InvalidInput("layer operator was assembled on a different surface".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    /// `E_r`.
    pub e: f64,
    /// `K_r`.
    pub k: f64,
    /// `𝓔_r = E_r + K_r`.
    pub total: f64,
}

/// Applies `Π` to `r` trailing derivative indices of a tensor with `lead` leading components.
fn project_modes(t: &mut [f64], pi: &Mat3, lead: usize, r: usize) {
    let n = 3usize.pow(r as u32);
    debug_assert_eq!(t.len(), lead * n);
    let mut tmp = [0.0; 3];
    for mode in 0..r {
        let stride = 3usize.pow((r - 1 - mode) as u32);
        for c in 0..lead {
            let base = c * n;
            for idx in 0..n {
                if (idx / stride) % 3 != 0 {
                    continue;
                }
                for (a, v) in tmp.iter_mut().enumerate() {
                    *v = (0..3).map(|b| pi[(a, b)] * t[base + idx + b * stride]).sum();
                }
                for a in 0..3 {
                    t[base + idx + a * stride] = tmp[a];
                }
            }
        }
    }
}

fn squared_norm(t: &[f64]) -> f64 {
    t.iter().map(|v| v * v).sum()
}

/// `E_r`, `K_r`, `𝓔_r` for `r = 0..=3`.
///
/// Interior terms use repeated one-sided-aware differences; `∇³` is third-order
/// differencing of grid data and is the least accurate.
pub fn energy_functionals(state: &FlowState, p: &Field) -> Result<[Energy; 4]> {
    let s = &state.sampling;
    let quad = s.quadrature_cells();
    let dn = pressure_normal_derivative(s, p)?;

    let mut du = vec![state.velocity.clone()];
    let mut dp = vec![p.clone()];
    let mut dw = vec![state.vorticity.clone()];
    for r in 1..=3 {
        du.push(gradient(s, &du[r - 1]));
        dp.push(gradient(s, &dp[r - 1]));
        if r <= 2 {
            dw.push(gradient(s, &dw[r - 1]));
        }
    }

    let mut out = [Energy { e: 0.0, k: 0.0, total: 0.0 }; 4];
    for r in 0..=3 {
        let mut interior = 0.0;
        for &(cell, w) in &quad {
            let mut t = du[r].cell(cell).to_vec();
            if r > 0 {
                project_modes(&mut t, &s.projector(cell), 3, r);
            }
            interior += w * squared_norm(&t);
        }
        let boundary = if r > 0 { boundary_energy(s, &dp[r], r, &dn)? } else { 0.0 };
        let e = interior + boundary;
        let k = if r == 0 { 0.0 } else { s.integrate(&dw[r - 1], squared_norm) };
        out[r] = Energy { e, k, total: e + k };
    }
    Ok(out)
}

/// `∫_∂ |Π∇^r p|² / |∇p| dS` from the grid field `∇^r p` and per-vertex `|∇p|`.
pub fn boundary_energy(s: &InteriorSampling, grad_r_p: &Field, r: usize, pressure_gradient: &[f64]) -> Result<f64> {
    let mesh = s.mesh();
    let mut acc = 0.0;
    for (v, x) in mesh.vertices().iter().enumerate() {
        let n = mesh.vertex_normals()[v];
        let pi = Mat3::identity() - n * n.transpose();
        let mut t = s
            .interpolate_quadratic(grad_r_p, x)
            .ok_or_else(|| Error::InvalidInput(format!("vertex {v} has no valid grid neighbourhood")))?;
        project_modes(&mut t, &pi, 1, r);
        let num = squared_norm(&t);
        if num == 0.0 {
            continue;
        }
        let g = pressure_gradient[v].abs();
        if g < TAYLOR_FLOOR {
            return Err(Error::TaylorDegenerate { vertex: v, gradient: g });
        }
        acc += mesh.vertex_areas()[v] * num / g;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BkmCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub vorticity_sup: f64,
    pub vorticity_h2: f64,
}

/// Discrete `H²` norm of a vector field over cells at least two cells inside.
pub fn discrete_h2_norm(s: &InteriorSampling, f: &Field) -> f64 {
    let g1 = gradient(s, f);
    let g2 = gradient(s, &g1);
    let h3 = s.h().powi(3);
    let cells = s.deep_cells(2);
    [f, &g1, &g2]
        .iter()
        .map(|d| cells.iter().map(|&c| h3 * squared_norm(d.cell(c))).sum::<f64>().sqrt())
        .sum()
}

/// `‖∇u₀‖_∞` against `(1 + log⁺‖ω‖_{H²})‖ω‖_∞ + 1`.
pub fn bkm_log_check(state: &FlowState, split: &VelocitySplit) -> BkmCheck {
    let s = &state.sampling;
    let g = gradient(s, &split.vortical);
    let lhs = s.sup_inside(&g, |m| squared_norm(m).sqrt());
    let vorticity_sup = s.sup_inside(&state.vorticity, |w| squared_norm(w).sqrt());
    let vorticity_h2 = discrete_h2_norm(s, &state.vorticity);
    let rhs = (1.0 + log_plus(vorticity_h2)) * vorticity_sup + 1.0;
    BkmCheck { lhs, rhs, ratio: lhs / rhs, vorticity_sup, vorticity_h2 }
}

/// Trapezoid rule for `∫ 𝒜² + ‖∇_N D_t p‖_∞ dt` over the record times.
pub fn breakdown_integral(records: &[DiagnosticsRecord]) -> Result<f64> {
    if records.len() < 2 {
        return Err(Error::UnsortedRecords(format!("need at least 2 records, got {}", records.len())));
    }
    let mut acc = 0.0;
    for (i, w) in records.windows(2).enumerate() {
        let dt = w[1].t - w[0].t;
        if !(dt > 0.0) {
            return Err(Error::UnsortedRecords(format!("record {} at t = {} does not follow t = {}", i + 1, w[1].t, w[0].t)));
        }
        let f = |r: &DiagnosticsRecord| r.a * r.a + r.grad_n_dtp_sup;
        acc += 0.5 * dt * (f(&w[0]) + f(&w[1]));
    }
    Ok(acc)
}
