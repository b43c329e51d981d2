//! Versioned JSON scenario description.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::shapes::{ellipsoid, icosphere, perturbed_sphere};
use crate::geometry::{SurfaceMesh, Vec3};
use crate::harmonics::{harmonic_mixture, Poly3};

pub const SCHEMA_VERSION: u32 = 1;

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceSpec {
    Sphere {
        #[serde(default = "unit")]
        radius: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    Ellipsoid { axes: [f64; 3] },
    /// Radius `R(1 + Σ a·H_{l,m}(x̂))` with modes `(l, m, a)`.
    PerturbedSphere {
        #[serde(default = "unit")]
        radius: f64,
        modes: Vec<(usize, usize, f64)>,
    },
}

impl SurfaceSpec {
    pub fn build(&self, subdiv: u32) -> Result<SurfaceMesh> {
        match self {
            SurfaceSpec::Sphere { radius, center } => {
                let m = icosphere(subdiv, *radius)?;
                if center.iter().all(|c| *c == 0.0) {
                    Ok(m)
                } else {
                    m.transformed(&crate::geometry::Mat3::identity(), &Vec3::from(*center))
                }
            }
            SurfaceSpec::Ellipsoid { axes } => ellipsoid(*axes, subdiv),
            SurfaceSpec::PerturbedSphere { radius, modes } => perturbed_sphere(*radius, modes, subdiv),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocitySpec {
    Zero,
    /// `u = Ω × x`.
    RigidRotation { omega: [f64; 3] },
    /// `u = A x` with trace-free `A` given row by row.
    Linear { matrix: [[f64; 3]; 3] },
    /// `u = ∇H` for a mixture of solid harmonics `(l, m, c)`.
    HarmonicPolynomial { terms: Vec<(usize, usize, f64)> },
    /// Potential flow of a point dipole placed outside the domain.
    Dipole { moment: [f64; 3], position: [f64; 3] },
    Translation { velocity: [f64; 3] },
    /// `u = (a x₂², 0, 0)`.
    Shear { amplitude: f64 },
}

/// Analytic velocity and vorticity of a [`VelocitySpec`].
pub struct VelocityField {
    kind: VelocityKind,
}

enum VelocityKind {
    Linear(crate::geometry::Mat3),
    Potential(Poly3),
    Dipole(Vec3, Vec3),
    Constant(Vec3),
    Shear(f64),
}

impl VelocitySpec {
    pub fn field(&self) -> Result<VelocityField> {
        use crate::geometry::Mat3;
        let kind = match self {
            VelocitySpec::Zero => VelocityKind::Constant(Vec3::zeros()),
            VelocitySpec::RigidRotation { omega } => {
                let w = Vec3::from(*omega);
                VelocityKind::Linear(w.cross_matrix())
            }
            VelocitySpec::Linear { matrix } => {
                let a = Mat3::from_fn(|i, j| matrix[i][j]);
                let scale = a.norm().max(1.0);
                if a.trace().abs() > 1e-12 * scale {
                    return Err(Error::InvalidInput(format!(
                        "linear velocity must be trace-free, trace = {}",
                        a.trace()
                    )));
                }
                VelocityKind::Linear(a)
            }
            VelocitySpec::HarmonicPolynomial { terms } => VelocityKind::Potential(harmonic_mixture(terms)?),
            VelocitySpec::Dipole { moment, position } => VelocityKind::Dipole(Vec3::from(*moment), Vec3::from(*position)),
            VelocitySpec::Translation { velocity } => VelocityKind::Constant(Vec3::from(*velocity)),
            VelocitySpec::Shear { amplitude } => VelocityKind::Shear(*amplitude),
        };
        Ok(VelocityField { kind })
    }
}

impl VelocityField {
    pub fn velocity(&self, x: &Vec3) -> Vec3 {
        match &self.kind {
            VelocityKind::Linear(a) => a * x,
            VelocityKind::Potential(h) => h.eval_gradient(x),
            VelocityKind::Dipole(m, c) => {
                // ∇(m·r / |r|³) with r = x − c
                let r = x - c;
                let r2 = r.norm_squared();
                let r3 = r2 * r2.sqrt();
                m / r3 - r * (3.0 * m.dot(&r) / (r3 * r2))
            }
            VelocityKind::Constant(v) => *v,
            VelocityKind::Shear(a) => Vec3::new(a * x.y * x.y, 0.0, 0.0),
        }
    }

    pub fn vorticity(&self, x: &Vec3) -> Vec3 {
        match &self.kind {
            VelocityKind::Linear(a) => {
                Vec3::new(a[(2, 1)] - a[(1, 2)], a[(0, 2)] - a[(2, 0)], a[(1, 0)] - a[(0, 1)])
            }
            VelocityKind::Shear(a) => Vec3::new(0.0, 0.0, -2.0 * a * x.y),
            _ => Vec3::zeros(),
        }
    }

    /// Distance from the dipole to the point, if the field has a singularity.
    pub fn singularity(&self) -> Option<Vec3> {
        match &self.kind {
            VelocityKind::Dipole(_, c) => Some(*c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BemSpec {
    pub subdiv: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_every: usize,
}

fn default_quality_floor() -> f64 {
    0.15
}

/// Monitor thresholds; `null` disables a monitor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    #[serde(rename = "K_max")]
    pub k_max: Option<f64>,
    pub taylor_min: Option<f64>,
    #[serde(default = "default_quality_floor")]
    pub quality_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    pub surface: SurfaceSpec,
    pub velocity: VelocitySpec,
    pub grid: GridSpec,
    pub bem: BemSpec,
    pub time: TimeSpec,
    pub events: EventSpec,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let s: Scenario = serde_json::from_value(raw.clone())?;
        // Variant payloads cannot deny unknown fields, so compare key sets.
        let canonical = serde_json::to_value(&s)?;
        if let Some(path) = unknown_key(&raw, &canonical, String::new()) {
            return Err(Error::InvalidInput(format!("unknown scenario key {path}")));
        }
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported schema {}, expected {SCHEMA_VERSION}",
                self.schema
            )));
        }
        if !(self.time.dt > 0.0) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.time.dt)));
        }
        if !(self.time.t_end >= self.time.dt) {
            return Err(Error::InvalidInput("t_end must be at least dt".into()));
        }
        if self.time.snapshot_every == 0 {
            return Err(Error::InvalidInput("snapshot_every must be at least 1".into()));
        }
        if !(self.grid.h > 0.0) {
            return Err(Error::InvalidInput(format!("grid spacing must be positive, got {}", self.grid.h)));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::InvalidInput(format!("invalid scenario name {:?}", self.name)));
        }
        self.velocity.field()?;
        Ok(())
    }

    /// Number of steps to reach `t_end`.
    pub fn n_steps(&self) -> usize {
        (self.time.t_end / self.time.dt - 1e-9).ceil() as usize
    }

    /// Unit ball with the given velocity, used by the built-in examples.
    pub fn unit_ball(name: &str, velocity: VelocitySpec, h: f64, subdiv: u32, dt: f64, t_end: f64) -> Self {
        Scenario {
            schema: SCHEMA_VERSION,
            name: name.into(),
            surface: SurfaceSpec::Sphere { radius: 1.0, center: [0.0; 3] },
            velocity,
            grid: GridSpec { h },
            bem: BemSpec { subdiv },
            time: TimeSpec { dt, t_end, snapshot_every: 10 },
            events: EventSpec { k_max: None, taylor_min: Some(0.0), quality_floor: default_quality_floor() },
        }
    }
}

fn unknown_key(raw: &serde_json::Value, canonical: &serde_json::Value, path: String) -> Option<String> {
    let (Some(r), Some(c)) = (raw.as_object(), canonical.as_object()) else { return None };
    for (k, v) in r {
        let sub = format!("{path}/{k}");
        match c.get(k) {
            None => return Some(sub),
            Some(cv) => {
                if let Some(p) = unknown_key(v, cv, sub) {
                    return Some(p);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROTATION: &str = r#"{
        "schema": 1,
        "name": "rotation",
        "surface": {"kind": "sphere", "params": {"radius": 1.0}},
        "velocity": {"kind": "rigid_rotation", "params": {"omega": [0, 0, 1]}},
        "grid": {"h": 0.1},
        "bem": {"subdiv": 3},
        "time": {"dt": 0.01, "t_end": 0.1, "snapshot_every": 5},
        "events": {"K_max": null, "taylor_min": 0.0, "quality_floor": 0.15}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let s = Scenario::from_json(ROTATION).unwrap();
        assert_eq!(s.velocity, VelocitySpec::RigidRotation { omega: [0.0, 0.0, 1.0] });
        assert_eq!(s.n_steps(), 10);
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn unknown_keys_and_bad_schema_are_rejected() {
        let extra = ROTATION.replace("\"grid\": {\"h\": 0.1}", "\"grid\": {\"h\": 0.1, \"n\": 3}");
        assert!(Scenario::from_json(&extra).is_err());
        let extra = ROTATION.replace("{\"radius\": 1.0}", "{\"radius\": 1.0, \"wobble\": 2}");
        assert!(Scenario::from_json(&extra).is_err());
        let top = ROTATION.replace("\"schema\": 1,", "\"schema\": 1, \"colour\": \"red\",");
        assert!(Scenario::from_json(&top).is_err());
        let v2 = ROTATION.replace("\"schema\": 1", "\"schema\": 2");
        assert!(Scenario::from_json(&v2).is_err());
        let neg = ROTATION.replace("\"dt\": 0.01", "\"dt\": -0.01");
        assert!(Scenario::from_json(&neg).is_err());
    }

    #[test]
    fn velocity_kinds_are_divergence_free_with_matching_vorticity() {
        let specs = [
            VelocitySpec::RigidRotation { omega: [0.3, -0.2, 1.0] },
            VelocitySpec::Linear { matrix: [[1.0, 0.5, 0.0], [0.0, -0.4, 0.2], [0.1, 0.0, -0.6]] },
            VelocitySpec::HarmonicPolynomial { terms: vec![(2, 1, 1.0), (3, 4, 0.5)] },
            VelocitySpec::Dipole { moment: [0.0, 0.0, 1.0], position: [0.0, 0.0, 3.0] },
            VelocitySpec::Shear { amplitude: 0.7 },
        ];
        let h = 1e-4;
        let x = Vec3::new(0.3, -0.2, 0.4);
        for spec in specs {
            let f = spec.field().unwrap();
            let d = |a: usize, b: usize| {
                let mut e = Vec3::zeros();
                e[a] = h;
                (f.velocity(&(x + e))[b] - f.velocity(&(x - e))[b]) / (2.0 * h)
            };
            let div = d(0, 0) + d(1, 1) + d(2, 2);
            assert!(div.abs() < 1e-7, "{spec:?}: div {div}");
            let curl = Vec3::new(d(1, 2) - d(2, 1), d(2, 0) - d(0, 2), d(0, 1) - d(1, 0));
            assert!((curl - f.vorticity(&x)).norm() < 1e-7, "{spec:?}");
        }
        let bad = VelocitySpec::Linear { matrix: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]] };
        assert!(bad.field().is_err());
    }
}
