//! Closed-form oracles on the unit ball: DtN eigenvalues, the Green's function
//! by images, and a manufactured Poisson problem.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::fields::{build_sampling, poisson_dirichlet, BoundaryData};
use crate::geometry::shapes::icosphere;
use crate::geometry::Vec3;
use crate::harmonics::{harmonic_count, solid_harmonic};
use crate::potential::{assemble, ball_green_oracle, LayerOperator};

pub const DTN_TOLERANCE: f64 = 0.03;
pub const GREEN_TOLERANCE: f64 = 0.02;
pub const SYMMETRY_TOLERANCE: f64 = 1e-3;
pub const NONNEGATIVITY_FLOOR: f64 = -1e-6;
pub const DECAY_RANGE: (f64, f64) = (-2.3, -1.7);
pub const POISSON_RATIO_RANGE: (f64, f64) = (3.2, 4.8);

/// Radius of the ball the Green's-function pairs are drawn from.
pub const PAIR_RADIUS: f64 = 0.85;
pub const PAIR_SEPARATION: f64 = 0.2;

#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub subdiv: u32,
    pub seed: u64,
    pub pairs: usize,
    pub poisson_steps: (f64, f64),
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { subdiv: 4, seed: 42, pairs: 50, poisson_steps: (0.1, 0.05) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleEntry {
    pub name: String,
    pub value: f64,
    /// Accepted interval `[lo, hi]`.
    pub accept: (f64, f64),
    pub passed: bool,
    pub seconds: f64,
    /// Error raised while computing the value, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct OracleReport {
    pub subdiv: u32,
    pub seed: u64,
    pub entries: Vec<OracleEntry>,
    #[serde(skip)]
    pub green_table: Vec<GreenRow>,
    #[serde(skip)]
    pub dtn_table: Vec<(usize, usize, f64)>,
    #[serde(skip)]
    pub poisson_table: Vec<(f64, f64)>,
}

impl OracleReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn get(&self, name: &str) -> Option<&OracleEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    fn push(&mut self, name: &str, value: f64, accept: (f64, f64), seconds: f64) {
        let passed = value.is_finite() && value >= accept.0 && value <= accept.1;
        self.entries.push(OracleEntry { name: name.into(), value, accept, passed, seconds, note: None });
    }

    fn push_failure(&mut self, name: &str, accept: (f64, f64), error: &crate::error::Error) {
        self.entries.push(OracleEntry {
            name: name.into(),
            value: f64::NAN,
            accept,
            passed: false,
            seconds: 0.0,
            note: Some(error.to_string()),
        });
    }

    pub fn green_csv(&self) -> String {
        let mut s = String::from("x_1,x_2,x_3,y_1,y_2,y_3,G_numeric,G_oracle,rel_err\n");
        for r in &self.green_table {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.x.x, r.x.y, r.x.z, r.y.x, r.y.y, r.y.z, r.numeric, r.oracle, r.rel_err
            );
        }
        s
    }

    pub fn dtn_csv(&self) -> String {
        let mut s = String::from("l,m,sup_rel_err\n");
        for (l, m, e) in &self.dtn_table {
            let _ = writeln!(s, "{l},{m},{e:.16e}");
        }
        s
    }

    pub fn poisson_csv(&self) -> String {
        let mut s = String::from("h,sup_error\n");
        for (h, e) in &self.poisson_table {
            let _ = writeln!(s, "{h},{e:.16e}");
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenRow {
    pub x: Vec3,
    pub y: Vec3,
    pub numeric: f64,
    pub oracle: f64,
    pub rel_err: f64,
}

/// Names of the checks performed by [`run_oracles`], in report order.
pub fn inventory() -> Vec<(&'static str, &'static str)> {
    vec![
        ("dtn_l1", "sup relative error of N Y_1 against 1·Y_1 on the unit sphere"),
        ("dtn_l2", "sup relative error of N Y_2 against 2·Y_2"),
        ("dtn_l3", "sup relative error of N Y_3 against 3·Y_3"),
        ("green_relative_error", "max relative error of the BEM Green's function against images"),
        ("green_symmetry", "max |G(x,y) − G(y,x)|"),
        ("green_min", "minimum sampled Green's function value"),
        ("green_gradient_exponent", "log-log slope of |∇_x G| against |x − y|"),
        ("poisson_ratio", "sup-error ratio of Δq = 6, q|∂ = 0 between the two grid steps"),
    ]
}

/// Sup relative DtN error over all solid harmonics of degree `l`.
pub fn dtn_eigen_error(op: &LayerOperator, l: usize) -> Result<Vec<f64>> {
    let verts = op.mesh().vertices();
    (0..harmonic_count(l))
        .map(|m| {
            let y = solid_harmonic(l, m)?;
            // Values on the unit sphere: Y(x / |x|).
            let psi: Vec<f64> = verts.iter().map(|v| y.eval(&(v / v.norm()))).collect();
            let d = op.dtn(&psi)?;
            let scale = psi.iter().fold(0.0f64, |a, v| a.max((l as f64 * v).abs()));
            Ok(d.iter().zip(&psi).map(|(a, b)| (a - l as f64 * b).abs()).fold(0.0, f64::max) / scale)
        })
        .collect()
}

/// Seeded pairs in the ball of radius [`PAIR_RADIUS`] with separation at least [`PAIR_SEPARATION`].
pub fn sample_pairs(n: usize, seed: u64) -> Vec<(Vec3, Vec3)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| loop {
        let p = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if p.norm() < 1.0 {
            return p * PAIR_RADIUS;
        }
    };
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let (x, y) = (point(&mut rng), point(&mut rng));
        if (x - y).norm() >= PAIR_SEPARATION {
            out.push((x, y));
        }
    }
    out
}

/// Least-squares slope of `log |∇_x G(x, y)|` against `log |x − y|` for sources
/// near the centre and separations in `[0.05, 0.4]`.
pub fn gradient_decay_exponent(op: &LayerOperator, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut logs = Vec::new();
    for _ in 0..4 {
        let y = Vec3::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
        let dir = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize();
        let trace: Vec<f64> = op.mesh().vertices().iter().map(|v| 1.0 / (4.0 * PI * (v - y).norm())).collect();
        let sigma = op.density(&trace)?;
        for k in 0..8 {
            let r = 0.05 * (8.0f64).powf(k as f64 / 7.0);
            let x = y + dir * r;
            let step = 1e-3 * r;
            let mut pts = Vec::with_capacity(6);
            for a in 0..3 {
                let mut e = Vec3::zeros();
                e[a] = step;
                pts.push(x + e);
                pts.push(x - e);
            }
            op.check_interior(&pts)?;
            let h = op.evaluate_densities(&pts, &[&sigma]).pop().unwrap();
            let g = |i: usize| 1.0 / (4.0 * PI * (pts[i] - y).norm()) - h[i];
            let grad = Vec3::new(g(0) - g(1), g(2) - g(3), g(4) - g(5)) / (2.0 * step);
            logs.push((r.ln(), grad.norm().ln()));
        }
    }
    let n = logs.len() as f64;
    let (mx, my) = logs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = logs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx).powi(2)));
    Ok(sxy / sxx)
}

/// Sup error of the manufactured solution `q = |x|² − 1` at grid step `h`.
pub fn poisson_sup_error(subdiv: u32, h: f64) -> Result<f64> {
    let mesh = icosphere(subdiv, 1.0)?;
    let s = build_sampling(&mesh, h)?;
    let f = s.sample(1, |_| vec![6.0]);
    let q = poisson_dirichlet(&s, &f, BoundaryData::Zero)?;
    Ok(s.inside_cells()
        .iter()
        .map(|&c| (q.field.get(c, 0) - (s.grid().position(c).norm_squared() - 1.0)).abs())
        .fold(0.0, f64::max))
}

/// Runs every check of [`inventory`]; numerical failures are itemized in the report.
pub fn run_oracles(config: &OracleConfig) -> Result<OracleReport> {
    let mut report = OracleReport { subdiv: config.subdiv, seed: config.seed, ..Default::default() };
    let start = std::time::Instant::now();
    let op = assemble(&icosphere(config.subdiv, 1.0)?)?;
    for l in 1..=3 {
        let t = std::time::Instant::now();
        let name = format!("dtn_l{l}");
        match dtn_eigen_error(&op, l) {
            Ok(errs) => {
                for (m, e) in errs.iter().enumerate() {
                    report.dtn_table.push((l, m, *e));
                }
                let worst = errs.iter().copied().fold(0.0, f64::max);
                // The first entry carries the operator assembly time.
                let secs = if l == 1 { start.elapsed() } else { t.elapsed() }.as_secs_f64();
                report.push(&name, worst, (0.0, DTN_TOLERANCE), secs);
            }
            Err(e) => report.push_failure(&name, (0.0, DTN_TOLERANCE), &e),
        }
    }

    let t = std::time::Instant::now();
    let pairs = sample_pairs(config.pairs, config.seed);
    let swapped: Vec<(Vec3, Vec3)> = pairs.iter().map(|&(x, y)| (y, x)).collect();
    let green = op.greens_function_pairs(&pairs).and_then(|f| Ok((f, op.greens_function_pairs(&swapped)?)));
    match green {
        Ok((forward, backward)) => {
            let mut worst_rel = 0.0f64;
            let mut worst_sym = 0.0f64;
            let mut min_g = f64::INFINITY;
            for (i, &(x, y)) in pairs.iter().enumerate() {
                let oracle = ball_green_oracle(1.0, &x, &y)?;
                let rel = (forward[i] - oracle).abs() / oracle.abs();
                worst_rel = worst_rel.max(rel);
                worst_sym = worst_sym.max((forward[i] - backward[i]).abs());
                min_g = min_g.min(forward[i]).min(backward[i]);
                report.green_table.push(GreenRow { x, y, numeric: forward[i], oracle, rel_err: rel });
            }
            report.push("green_relative_error", worst_rel, (0.0, GREEN_TOLERANCE), t.elapsed().as_secs_f64());
            report.push("green_symmetry", worst_sym, (0.0, SYMMETRY_TOLERANCE), 0.0);
            report.push("green_min", min_g, (NONNEGATIVITY_FLOOR, f64::INFINITY), 0.0);
        }
        Err(e) => {
            report.push_failure("green_relative_error", (0.0, GREEN_TOLERANCE), &e);
            report.push_failure("green_symmetry", (0.0, SYMMETRY_TOLERANCE), &e);
            report.push_failure("green_min", (NONNEGATIVITY_FLOOR, f64::INFINITY), &e);
        }
    }
    let t = std::time::Instant::now();
    match gradient_decay_exponent(&op, config.seed) {
        Ok(slope) => report.push("green_gradient_exponent", slope, DECAY_RANGE, t.elapsed().as_secs_f64()),
        Err(e) => report.push_failure("green_gradient_exponent", DECAY_RANGE, &e),
    }

    let t = std::time::Instant::now();
    let (h0, h1) = config.poisson_steps;
    match poisson_sup_error(config.subdiv, h0).and_then(|e0| Ok((e0, poisson_sup_error(config.subdiv, h1)?))) {
        Ok((e0, e1)) => {
            report.poisson_table = vec![(h0, e0), (h1, e1)];
            report.push("poisson_ratio", e0 / e1, POISSON_RATIO_RANGE, t.elapsed().as_secs_f64());
        }
        Err(e) => report.push_failure("poisson_ratio", POISSON_RATIO_RANGE, &e),
    }
    Ok(report)
}
