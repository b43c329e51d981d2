//! Time integration of the free-boundary flow with monitored diagnostics.
//!
//! The boundary is a Lagrangian mesh moved with the interpolated velocity; the
//! velocity and vorticity live on a fixed lattice and are advanced with the
//! Eulerian equations `∂_t u = −(u·∇)u − ∇p` and `∂_t ω = −(u·∇)ω + (ω·∇)u`
//! by classical RK4, rebuilding the domain sampling at every stage.

mod scenario;

pub use scenario::{
    BemSpec, EventSpec, GridSpec, Scenario, SurfaceSpec, TimeSpec, VelocityField, VelocitySpec, SCHEMA_VERSION,
};

use serde::Serialize;

use crate::diagnostics::{
    bkm_log_check, compute_a, compute_k, energy_functionals, geometric_k, pressure_normal_derivative,
    DiagnosticsRecord,
};
use crate::error::{Error, Result};
use crate::fields::{
    build_sampling_on, curl, extrapolate_band, gradient, material_pressure_solve, pressure_solve, velocity_split,
    Field, FlowState, Grid, InteriorSampling,
};
use crate::geometry::{SurfaceMesh, Vec3};
use crate::potential::assemble;

/// Lattice layers kept around the surface when a grid is (re)built.
pub const GRID_MARGIN: i64 = 8;
/// Regrid once the surface comes within this many layers of the grid edge.
pub const REGRID_MARGIN: i64 = 5;
pub const CFL_NUMBER: f64 = 0.5;

/// Builds the initial state of a scenario.
pub fn init_scenario(scenario: &Scenario) -> Result<FlowState> {
    scenario.validate()?;
    let mesh = scenario.surface.build(scenario.bem.subdiv)?;
    let (lo, hi) = mesh.bounding_box();
    let grid = Grid::covering(&lo, &hi, scenario.grid.h, GRID_MARGIN)?;
    let sampling = build_sampling_on(&mesh, grid)?;
    let field = scenario.velocity.field()?;
    if let Some(c) = field.singularity() {
        let near = sampling.locator().closest(&c);
        let outward = (c - near.point).dot(&mesh.interpolated_normal(near.face, &near.bary));
        if outward <= 0.0 || near.distance < 4.0 * scenario.grid.h {
            return Err(Error::InvalidInput("dipole must lie well outside the domain".into()));
        }
    }
    let u = sampling.sample(3, |x| field.velocity(x).as_slice().to_vec());
    let w = sampling.sample(3, |x| field.vorticity(x).as_slice().to_vec());
    FlowState::with_vorticity(sampling, u, w, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport {
    pub t: f64,
    pub dt: f64,
    pub cfl_limit: f64,
    /// `‖div u‖_∞` over inside cells after the step.
    pub divergence_sup: f64,
    pub min_aspect: f64,
    pub volume: f64,
}

struct Rates {
    u: Field,
    w: Field,
    x: Vec<Vec3>,
}

/// Copies inside-cell values onto `s` and refills its band.
fn reseat(s: &InteriorSampling, f: &Field) -> Result<Field> {
    let mut out = Field::invalid(s.grid().n_cells(), f.ncomp);
    for &c in s.inside_cells() {
        let v = f.cell(c);
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("no data for newly wetted cell {c}; reduce dt")));
        }
        out.set_cell(c, v);
    }
    extrapolate_band(s, &mut out);
    Ok(out)
}

fn rates(s: &InteriorSampling, u: &Field, w: &Field) -> Result<Rates> {
    let p = pressure_solve(s, u)?.field;
    let gu = gradient(s, u);
    let gw = gradient(s, w);
    let gp = gradient(s, &p);
    let mut du = Field::invalid(s.grid().n_cells(), 3);
    let mut dw = Field::invalid(s.grid().n_cells(), 3);
    for &c in s.inside_cells() {
        let uc = u.vec3(c);
        let wc = w.vec3(c);
        for b in 0..3 {
            let mut adv_u = 0.0;
            let mut adv_w = 0.0;
            let mut stretch = 0.0;
            for a in 0..3 {
                adv_u += uc[a] * gu.get(c, b * 3 + a);
                adv_w += uc[a] * gw.get(c, b * 3 + a);
                stretch += wc[a] * gu.get(c, b * 3 + a);
            }
            du.set(c, b, -adv_u - gp.get(c, b));
            dw.set(c, b, -adv_w + stretch);
        }
    }
    extrapolate_band(s, &mut du);
    extrapolate_band(s, &mut dw);
    let x = crate::fields::FlowState::with_vorticity(s.clone(), u.clone(), w.clone(), 0.0)?.boundary_velocity()?;
    Ok(Rates { u: du, w: dw, x })
}

fn velocity_sup(s: &InteriorSampling, u: &Field) -> f64 {
    s.sup_inside(u, |v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
}

fn displaced(mesh: &SurfaceMesh, base: &[Vec3], rate: &[Vec3], dt: f64) -> Result<SurfaceMesh> {
    mesh.with_vertices(base.iter().zip(rate).map(|(x, v)| x + v * dt).collect())
}

/// Moves the fields onto a larger lattice when the surface nears the grid edge.
fn ensure_grid(state: &FlowState) -> Result<FlowState> {
    let s = &state.sampling;
    let (lo, hi) = state.mesh().bounding_box();
    if s.grid().contains_with_margin(&lo, &hi, REGRID_MARGIN) {
        return Ok(state.clone());
    }
    let grid = Grid::covering(&lo, &hi, s.h(), GRID_MARGIN)?;
    let transfer = |f: &Field| {
        let mut out = Field::invalid(grid.n_cells(), f.ncomp);
        for c in 0..s.grid().n_cells() {
            if let Some(nc) = grid.cell_of_global(s.grid().global(c)) {
                out.set_cell(nc, f.cell(c));
            }
        }
        out
    };
    let (u, w) = (transfer(&state.velocity), transfer(&state.vorticity));
    let sampling = build_sampling_on(state.mesh(), grid)?;
    let (u, w) = (reseat(&sampling, &u)?, reseat(&sampling, &w)?);
    FlowState::with_vorticity(sampling, u, w, state.time)
}

/// One classical Runge–Kutta step of size `dt` (negative steps run backwards).
pub fn step_rk4(state: &FlowState, dt: f64, quality_floor: f64) -> Result<(FlowState, StepReport)> {
    let state = ensure_grid(state)?;
    let s0 = &state.sampling;
    let h = s0.h();
    let speed = velocity_sup(s0, &state.velocity);
    let cfl_limit = if speed > 0.0 { CFL_NUMBER * h / speed } else { f64::INFINITY };
    if dt.abs() > cfl_limit {
        return Err(Error::CflViolation { dt: dt.abs(), limit: cfl_limit });
    }
    let mesh0 = state.mesh().clone();
    let x0 = mesh0.vertices().to_vec();
    let grid = *s0.grid();

    let k1 = rates(s0, &state.velocity, &state.vorticity)?;
    let mut ks = vec![k1];
    for (i, c) in [0.5, 0.5, 1.0].into_iter().enumerate() {
        let prev = &ks[i];
        let mesh = displaced(&mesh0, &x0, &prev.x, c * dt)?;
        let s = build_sampling_on(&mesh, grid)?;
        let u = reseat(&s, &state.velocity.axpy(c * dt, &prev.u))?;
        let w = reseat(&s, &state.vorticity.axpy(c * dt, &prev.w))?;
        ks.push(rates(&s, &u, &w)?);
    }
    let combine = |base: &Field, pick: &dyn Fn(&Rates) -> &Field| {
        base.axpy(dt / 6.0, pick(&ks[0]))
            .axpy(dt / 3.0, pick(&ks[1]))
            .axpy(dt / 3.0, pick(&ks[2]))
            .axpy(dt / 6.0, pick(&ks[3]))
    };
    let x1: Vec<Vec3> = (0..x0.len())
        .map(|v| x0[v] + (ks[0].x[v] + ks[1].x[v] * 2.0 + ks[2].x[v] * 2.0 + ks[3].x[v]) * (dt / 6.0))
        .collect();
    let mesh1 = mesh0.with_vertices(x1)?;
    let min_aspect = mesh1.min_aspect();
    if min_aspect < quality_floor {
        return Err(Error::MeshQualityFailure { aspect: min_aspect, floor: quality_floor });
    }
    let s1 = build_sampling_on(&mesh1, grid)?;
    let u1 = reseat(&s1, &combine(&state.velocity, &|r| &r.u))?;
    let w1 = reseat(&s1, &combine(&state.vorticity, &|r| &r.w))?;
    let div = crate::fields::divergence(&s1, &u1)?;
    let divergence_sup = s1.sup_inside(&div, |v| v[0].abs());
    let volume = mesh1.signed_volume();
    let next = FlowState::with_vorticity(s1, u1, w1, state.time + dt)?;
    Ok((next, StepReport { t: state.time + dt, dt, cfl_limit, divergence_sup, min_aspect, volume }))
}

/// Relative L² difference between the transported vorticity and `curl u`.
pub fn vorticity_consistency(state: &FlowState) -> Result<f64> {
    let s = &state.sampling;
    let c = curl(s, &state.velocity)?;
    let diff = state.vorticity.axpy(-1.0, &c);
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let num = s.integrate(&diff, sq).sqrt();
    let den = s.integrate(&state.vorticity, sq).sqrt();
    Ok(if den > 0.0 { num / den } else { num })
}

/// Full diagnostics record of a state.
pub fn diagnose(state: &FlowState) -> Result<DiagnosticsRecord> {
    let s = &state.sampling;
    let layer = assemble(state.mesh())?;
    let p = pressure_solve(s, &state.velocity)?.field;
    let a = compute_a(state, &layer)?;
    let dn = pressure_normal_derivative(s, &p)?;
    let taylor_margin = dn.iter().map(|v| -v).fold(f64::INFINITY, f64::min);
    let k = match compute_k(s, &p) {
        Ok(k) => k,
        Err(Error::TaylorDegenerate { .. }) => geometric_k(s),
        Err(e) => return Err(e),
    };
    let dtp = material_pressure_solve(s, &state.velocity, &p)?;
    let grad_n_dtp_sup = dtp.normal_derivative.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let energies = energy_functionals(state, &p)?;
    let split = velocity_split(s, &layer, &state.velocity)?;
    let bkm = bkm_log_check(state, &split);
    Ok(DiagnosticsRecord {
        t: state.time,
        a,
        k,
        taylor_margin,
        grad_n_dtp_sup,
        e: energies.map(|e| e.e),
        k_r: [energies[1].k, energies[2].k, energies[3].k],
        total: energies.map(|e| e.total),
        volume: state.mesh().signed_volume(),
        split_residual: split.residual,
        bkm_lhs: bkm.lhs,
        bkm_rhs: bkm.rhs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    /// A monitored threshold fired: `taylor_sign`, `K_max` or `mesh_quality`.
    Event(String),
    Failure(String),
}

impl Termination {
    pub fn label(&self) -> String {
        match self {
            Termination::Completed => "completed".into(),
            Termination::Event(e) => e.clone(),
            Termination::Failure(f) => format!("failure: {f}"),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Termination::Completed => 0,
            Termination::Event(_) => 2,
            Termination::Failure(_) => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub mesh: SurfaceMesh,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub name: String,
    pub records: Vec<DiagnosticsRecord>,
    pub steps: Vec<StepReport>,
    /// Boundary meshes every `snapshot_every` steps plus the last one.
    pub snapshots: Vec<Snapshot>,
    pub vorticity_consistency: Vec<f64>,
    pub final_state: FlowState,
    pub termination: Termination,
}

fn check_events(scenario: &Scenario, rec: &DiagnosticsRecord) -> Option<Termination> {
    if let Some(min) = scenario.events.taylor_min {
        if rec.taylor_margin < min {
            return Some(Termination::Event("taylor_sign".into()));
        }
    }
    if let Some(max) = scenario.events.k_max {
        if rec.k > max {
            return Some(Termination::Event("K_max".into()));
        }
    }
    None
}

/// Runs a scenario to `t_end` or the first monitored event; failures after
/// initialization end the run and are reported as the termination reason.
pub fn run(scenario: &Scenario) -> Result<Trajectory> {
    let mut state = init_scenario(scenario)?;
    let n_steps = scenario.n_steps();
    let mut traj = Trajectory {
        name: scenario.name.clone(),
        records: Vec::new(),
        steps: Vec::new(),
        snapshots: vec![Snapshot { step: 0, time: 0.0, mesh: state.mesh().clone() }],
        vorticity_consistency: vec![vorticity_consistency(&state)?],
        final_state: state.clone(),
        termination: Termination::Completed,
    };
    let first = diagnose(&state)?;
    traj.records.push(first);
    if let Some(t) = check_events(scenario, &first) {
        traj.termination = t;
        return Ok(traj);
    }
    for step in 1..=n_steps {
        let dt = scenario.time.dt;
        let outcome = step_rk4(&state, dt, scenario.events.quality_floor).and_then(|(next, report)| {
            let mut next = next;
            // Pin times to the step index so records do not accumulate rounding.
            next.time = step as f64 * dt;
            let rec = diagnose(&next)?;
            Ok((next, report, rec))
        });
        match outcome {
            Ok((next, report, rec)) => {
                state = next;
                traj.steps.push(report);
                traj.records.push(rec);
                traj.vorticity_consistency.push(vorticity_consistency(&state)?);
                if step % scenario.time.snapshot_every == 0 || step == n_steps {
                    traj.snapshots.push(Snapshot { step, time: state.time, mesh: state.mesh().clone() });
                }
                if let Some(t) = check_events(scenario, &rec) {
                    traj.termination = t;
                    break;
                }
            }
            Err(Error::MeshQualityFailure { .. }) => {
                traj.termination = Termination::Event("mesh_quality".into());
                break;
            }
            Err(e) => {
                traj.termination = Termination::Failure(e.to_string());
                break;
            }
        }
    }
    traj.final_state = state;
    Ok(traj)
}

/// `max |vol(t) − vol(0)| / vol(0)` over the records.
pub fn volume_drift(traj: &Trajectory) -> f64 {
    relative_drift(traj.records.iter().map(|r| r.volume))
}

/// `max |𝓔₀(t) − 𝓔₀(0)| / 𝓔₀(0)` over the records.
pub fn energy_drift(traj: &Trajectory) -> f64 {
    relative_drift(traj.records.iter().map(|r| r.total[0]))
}

fn relative_drift(mut values: impl Iterator<Item = f64>) -> f64 {
    let Some(first) = values.next() else { return 0.0 };
    let worst = values.map(|v| (v - first).abs()).fold(0.0, f64::max);
    if first != 0.0 {
        worst / first.abs()
    } else {
        worst
    }
}
