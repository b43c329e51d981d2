//! Run directories: scenario overrides, diagnostics CSV, OFF snapshots and the
//! JSON summary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{breakdown_integral, write_csv, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::evolution::{energy_drift, run, volume_drift, Scenario, Termination, Trajectory};
use crate::fields::FlowState;
use crate::geometry::off::to_off_string;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SCENARIO_FILE: &str = "scenario.json";
pub const FIELDS_FILE: &str = "fields_final.csv";

/// Command-line replacements for scenario values.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub h: Option<f64>,
    pub t_end: Option<f64>,
    pub k_max: Option<f64>,
    pub taylor_min: Option<f64>,
    pub quality_floor: Option<f64>,
    /// Turns the Taylor-sign monitor off.
    pub no_taylor: bool,
}

impl Overrides {
    pub fn apply(&self, scenario: &mut Scenario) -> Result<()> {
        if let Some(dt) = self.dt {
            scenario.time.dt = dt;
        }
        if let Some(h) = self.h {
            scenario.grid.h = h;
        }
        if let Some(t) = self.t_end {
            scenario.time.t_end = t;
        }
        if let Some(k) = self.k_max {
            scenario.events.k_max = Some(k);
        }
        if let Some(m) = self.taylor_min {
            scenario.events.taylor_min = Some(m);
        }
        if self.no_taylor {
            scenario.events.taylor_min = None;
        }
        if let Some(q) = self.quality_floor {
            scenario.events.quality_floor = q;
        }
        scenario.validate()
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: PathBuf,
    /// Defaults to `runs/<scenario name>`.
    pub output: Option<PathBuf>,
    pub force: bool,
    pub overrides: Overrides,
    /// Also write the final velocity and vorticity on the inside cells.
    pub export_fields: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    /// `completed`, an event name, or `failure`.
    pub termination: String,
    pub reason: Option<String>,
    pub exit_code: i32,
    pub steps: usize,
    pub records: usize,
    pub final_time: f64,
    /// Zero when the run stopped at its first record.
    pub breakdown_integral: f64,
    pub volume_drift: f64,
    pub energy_drift: f64,
    /// Largest relative L² gap between ω and curl u over the run.
    pub vorticity_consistency: f64,
    pub first_taylor_margin: f64,
    pub last_taylor_margin: f64,
    pub snapshots: Vec<String>,
}

impl RunSummary {
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let (termination, reason) = match &traj.termination {
            Termination::Completed => ("completed".to_string(), None),
            Termination::Event(e) => (e.clone(), None),
            Termination::Failure(f) => ("failure".to_string(), Some(f.clone())),
        };
        let first = traj.records.first().copied().unwrap_or_default();
        let last = traj.records.last().copied().unwrap_or_default();
        Ok(Self {
            name: traj.name.clone(),
            termination,
            reason,
            exit_code: traj.termination.exit_code(),
            steps: traj.steps.len(),
            records: traj.records.len(),
            final_time: last.t,
            breakdown_integral: integral_or_zero(&traj.records)?,
            volume_drift: volume_drift(traj),
            energy_drift: energy_drift(traj),
            vorticity_consistency: traj.vorticity_consistency.iter().copied().fold(0.0, f64::max),
            first_taylor_margin: first.taylor_margin,
            last_taylor_margin: last.taylor_margin,
            snapshots: traj.snapshots.iter().map(|s| snapshot_name(s.step)).collect(),
        })
    }
}

/// Breakdown integral, taken as zero over a single record.
pub fn integral_or_zero(records: &[DiagnosticsRecord]) -> Result<f64> {
    if records.len() < 2 {
        Ok(0.0)
    } else {
        breakdown_integral(records)
    }
}

pub fn snapshot_name(step: usize) -> String {
    format!("mesh_{step}.off")
}

/// Creates `dir`, clearing it first when `force` is set.
pub fn prepare_run_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        if !force {
            return Err(Error::OutputExists(dir.display().to_string()));
        }
        if !dir.is_dir() {
            return Err(Error::InvalidInput(format!("{} is not a directory", dir.display())));
        }
        fs::remove_dir_all(dir)?;
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Flat CSV of velocity and vorticity on the inside cells.
pub fn fields_csv(state: &FlowState) -> String {
    let s = &state.sampling;
    let mut out = String::from("cell,x,y,z,u1,u2,u3,w1,w2,w3\n");
    for &c in s.inside_cells() {
        let x = s.grid().position(c);
        let mut row = vec![c.to_string()];
        row.extend([x.x, x.y, x.z].iter().map(|v| format!("{v:.16e}")));
        row.extend((0..3).map(|k| format!("{:.16e}", state.velocity.get(c, k))));
        row.extend((0..3).map(|k| format!("{:.16e}", state.vorticity.get(c, k))));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_run(dir: &Path, scenario: &Scenario, traj: &Trajectory, export_fields: bool) -> Result<RunSummary> {
    let summary = RunSummary::from_trajectory(traj)?;
    fs::write(dir.join(SCENARIO_FILE), scenario.to_json())?;
    fs::write(dir.join(DIAGNOSTICS_FILE), write_csv(&traj.records))?;
    for snap in &traj.snapshots {
        fs::write(dir.join(snapshot_name(snap.step)), to_off_string(&snap.mesh))?;
    }
    if export_fields {
        fs::write(dir.join(FIELDS_FILE), fields_csv(&traj.final_state))?;
    }
    fs::write(dir.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

/// Loads, runs and writes one scenario. Returns the run directory and summary.
pub fn execute_run(config: &RunConfig) -> Result<(PathBuf, RunSummary)> {
    let mut scenario = Scenario::load(&config.scenario)?;
    config.overrides.apply(&mut scenario)?;
    let dir = config.output.clone().unwrap_or_else(|| Path::new("runs").join(&scenario.name));
    prepare_run_dir(&dir, config.force)?;
    let traj = run(&scenario)?;
    let summary = write_run(&dir, &scenario, &traj, config.export_fields)?;
    Ok((dir, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::VelocitySpec;

    #[test]
    fn existing_directory_needs_force() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("run");
        prepare_run_dir(&dir, false).unwrap();
        fs::write(dir.join("stale.txt"), "x").unwrap();
        assert!(matches!(prepare_run_dir(&dir, false), Err(Error::OutputExists(_))));
        prepare_run_dir(&dir, true).unwrap();
        assert!(!dir.join("stale.txt").exists());
    }

    #[test]
    fn overrides_replace_and_revalidate() {
        let mut s = Scenario::unit_ball("z", VelocitySpec::Zero, 0.1, 2, 0.01, 0.1);
        let o = Overrides { dt: Some(0.02), no_taylor: true, ..Default::default() };
        o.apply(&mut s).unwrap();
        assert_eq!(s.time.dt, 0.02);
        assert_eq!(s.events.taylor_min, None);
        let bad = Overrides { h: Some(-1.0), ..Default::default() };
        assert!(bad.apply(&mut s).is_err());
    }

    #[test]
    fn single_record_integral_is_zero() {
        assert_eq!(integral_or_zero(&[DiagnosticsRecord::default()]).unwrap(), 0.0);
    }
}
