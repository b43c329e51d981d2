//! Acceptance criteria, one line per criterion. Pass criterion numbers as
//! arguments to run a subset.

use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use freesurf::diagnostics::{parse_csv, DiagnosticsRecord};
use freesurf::evolution::{run, Scenario, Termination, VelocitySpec};
use freesurf::fields::{build_sampling, poisson_dirichlet, BoundaryData, FlowState};
use freesurf::geometry::shapes::{ellipsoid, icosphere};
use freesurf::geometry::{injectivity_radius, second_fundamental_form, SurfaceMesh, Vec3};
use freesurf::harmonics::{harmonic_count, harmonic_mixture, solid_harmonic};
use freesurf::harness::commands::cmd_run;
use freesurf::harness::oracle::{gradient_decay_exponent, sample_pairs};
use freesurf::harness::run::{Overrides, RunConfig, RunSummary};
use freesurf::harness::verify::{bkm_scaling, run_verify, VerifyConfig, BALL_RADII};
use freesurf::potential::assemble;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn dtn_spectrum() -> Check {
    let start = Instant::now();
    let mesh = icosphere(4, 1.0).map_err(err)?;
    let op = assemble(&mesh).map_err(err)?;
    let mut worst = [0.0f64; 3];
    for l in 1..=3 {
        for m in 0..harmonic_count(l) {
            let y = solid_harmonic(l, m).map_err(err)?;
            let psi: Vec<f64> = mesh.vertices().iter().map(|v| y.eval(v)).collect();
            let n = op.dtn(&psi).map_err(err)?;
            let scale = psi.iter().map(|p| (l as f64 * p).abs()).fold(0.0, f64::max);
            let e = n.iter().zip(&psi).map(|(a, p)| (a - l as f64 * p).abs()).fold(0.0, f64::max) / scale;
            worst[l - 1] = worst[l - 1].max(e);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst.iter().all(|&e| e < 0.03) && secs < 60.0,
        format!("sup rel err l=1,2,3: {:.3e} {:.3e} {:.3e}; {secs:.1} s", worst[0], worst[1], worst[2]),
    )
}

fn images(x: &Vec3, y: &Vec3) -> f64 {
    let ny = y.norm();
    let star = y / (ny * ny);
    1.0 / (4.0 * PI * (x - y).norm()) - 1.0 / (4.0 * PI * ny * (x - star).norm())
}

fn green_oracle() -> Check {
    let mesh = icosphere(4, 1.0).map_err(err)?;
    let op = assemble(&mesh).map_err(err)?;
    let pairs = sample_pairs(50, 42);
    let swapped: Vec<(Vec3, Vec3)> = pairs.iter().map(|&(x, y)| (y, x)).collect();
    let g = op.greens_function_pairs(&pairs).map_err(err)?;
    let gs = op.greens_function_pairs(&swapped).map_err(err)?;
    let mut rel = 0.0f64;
    let mut sym = 0.0f64;
    let mut min = f64::INFINITY;
    for (i, (x, y)) in pairs.iter().enumerate() {
        assert!((x - y).norm() >= 0.2);
        let exact = images(x, y);
        rel = rel.max((g[i] - exact).abs() / exact.abs());
        sym = sym.max((g[i] - gs[i]).abs());
        min = min.min(g[i]).min(gs[i]);
    }
    let slope = gradient_decay_exponent(&op, 42).map_err(err)?;
    ensure(
        rel < 0.02 && sym < 1e-3 && min >= -1e-6 && (-2.3..=-1.7).contains(&slope),
        format!("rel err {rel:.3e}, symmetry {sym:.3e}, min G {min:.3e}, |grad G| exponent {slope:.3}"),
    )
}

fn poisson_error(h: f64) -> Result<f64, String> {
    let mesh = icosphere(4, 1.0).map_err(err)?;
    let s = build_sampling(&mesh, h).map_err(err)?;
    let f = s.sample(1, |_| vec![6.0]);
    let q = poisson_dirichlet(&s, &f, BoundaryData::Zero).map_err(err)?.field;
    Ok(s.inside_cells()
        .iter()
        .map(|&c| {
            let x = s.grid().position(c);
            (q.get(c, 0) - (x.dot(&x) - 1.0)).abs()
        })
        .fold(0.0, f64::max))
}

fn poisson_convergence() -> Check {
    let start = Instant::now();
    let coarse = poisson_error(0.1)?;
    let fine = poisson_error(0.05)?;
    let ratio = coarse / fine;
    let secs = start.elapsed().as_secs_f64();
    ensure(
        (3.2..=4.8).contains(&ratio) && secs < 120.0,
        format!("sup err h=0.1 {coarse:.3e}, h=0.05 {fine:.3e}, ratio {ratio:.3}; {secs:.1} s"),
    )
}

fn curvature_range(mesh: &SurfaceMesh) -> Result<(f64, f64), String> {
    let c = second_fundamental_form(mesh).map_err(err)?;
    let ks = c.principal_curvatures.iter().flat_map(|k| k.iter().map(|v| v.abs()));
    Ok(ks.fold((f64::INFINITY, 0.0f64), |(lo, hi), k| (lo.min(k), hi.max(k))))
}

fn geometry_oracles() -> Check {
    let sphere = icosphere(4, 1.0).map_err(err)?;
    let (lo, hi) = curvature_range(&sphere)?;
    let curv_err = (1.0 - lo).max(hi - 1.0);
    let iota = injectivity_radius(&sphere, 10.0).map_err(err)?;
    let iota_err = (iota - 1.0).abs();

    let base = ellipsoid([1.3, 1.0, 0.8], 3).map_err(err)?;
    let base_curv = second_fundamental_form(&base).map_err(err)?;
    let base_iota = injectivity_radius(&base, 10.0).map_err(err)?;
    let mut scaling = 0.0f64;
    for lambda in [0.5, 2.0, 3.0] {
        let m = base.scaled(lambda).map_err(err)?;
        let c = second_fundamental_form(&m).map_err(err)?;
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        for (k, k0) in c.principal_curvatures.iter().zip(&base_curv.principal_curvatures) {
            for i in 0..2 {
                scaling = scaling.max(rel(k[i] * lambda, k0[i]));
            }
        }
        scaling = scaling.max(rel(c.theta_sup * lambda, base_curv.theta_sup));
        scaling = scaling.max(rel(injectivity_radius(&m, 10.0 * lambda).map_err(err)? / lambda, base_iota));
        scaling = scaling.max(rel(m.total_area() / (lambda * lambda), base.total_area()));
        scaling = scaling.max(rel(m.signed_volume() / lambda.powi(3), base.signed_volume()));
    }
    ensure(
        curv_err < 0.02 && iota_err < 0.05 && scaling < 1e-10,
        format!("sphere curvature err {curv_err:.3e}, iota0 err {iota_err:.3e}, scaling defect {scaling:.3e}"),
    )
}

fn interior_points(axes: [f64; 3], shrink: f64, spacing: f64) -> Vec<Vec3> {
    let mut out = Vec::new();
    let n = (axes.iter().fold(0.0f64, |a, b| a.max(*b)) / spacing).ceil() as i64;
    for i in -n..=n {
        for j in -n..=n {
            for k in -n..=n {
                let p = Vec3::new(i as f64, j as f64, k as f64) * spacing;
                let r: f64 = (0..3).map(|a| (p[a] / axes[a]).powi(2)).sum();
                if r.sqrt() <= shrink {
                    out.push(p);
                }
            }
        }
    }
    out
}

fn bernstein_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    let mut count = 0;
    for axes in [[1.0, 1.0, 1.0], [1.3, 1.0, 0.8]] {
        let mesh = ellipsoid(axes, 3).map_err(err)?;
        let op = assemble(&mesh).map_err(err)?;
        let samples = interior_points(axes, 0.7, 0.15);
        for _ in 0..10 {
            let mut terms = Vec::new();
            for l in 1..=4 {
                for m in 0..harmonic_count(l) {
                    terms.push((l, m, rng.gen_range(-1.0..1.0)));
                }
            }
            let poly = harmonic_mixture(&terms).map_err(err)?;
            let psi: Vec<f64> = mesh.vertices().iter().map(|v| poly.eval(v)).collect();
            let (interior, boundary) = op.bernstein_gap(&psi, &samples).map_err(err)?;
            worst = worst.max(interior / boundary);
            count += 1;
        }
    }
    ensure(worst <= 1.05, format!("{count} extensions, worst interior/boundary {worst:.4}"))
}

fn bkm_scaling_check() -> Check {
    let mesh = icosphere(3, 1.0).map_err(err)?;
    let s = build_sampling(&mesh, 0.1).map_err(err)?;
    let layer = assemble(&mesh).map_err(err)?;
    let u = s.sample(3, |x| vec![x.y * x.y, 0.0, 0.0]);
    let state = FlowState::new(s, u, 0.0).map_err(err)?;
    let b = bkm_scaling(&state, &layer).map_err(err)?;
    let lambdas = [1.0, 10.0, 100.0];
    let homogeneity = lambdas.iter().zip(&b.lhs).map(|(l, v)| (v / (l * b.lhs[0]) - 1.0).abs()).fold(0.0, f64::max);
    let ratios: Vec<f64> = b.lhs.iter().zip(&b.rhs).map(|(l, r)| l / r).collect();
    let monotone = ratios.windows(2).all(|w| w[1] <= 1.1 * w[0]);
    ensure(
        b.lambdas == lambdas && b.lhs[0] > 0.0 && homogeneity <= 1e-6 && monotone,
        format!("ratios {:.4} {:.4} {:.4}, homogeneity defect {homogeneity:.2e}", ratios[0], ratios[1], ratios[2]),
    )
}

fn relative_drift(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let first = values.clone().next().unwrap_or(0.0);
    values.map(|v| ((v - first) / first).abs()).fold(0.0, f64::max)
}

fn conservation() -> Check {
    let start = Instant::now();
    let scenario = Scenario::load(&scenario_path("conservation.json")).map_err(err)?;
    let ok_setup = scenario.time.dt == 0.01
        && scenario.grid.h == 0.05
        && scenario.time.t_end == 0.5
        && matches!(scenario.velocity, VelocitySpec::RigidRotation { .. });
    let traj = run(&scenario).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    let energy = relative_drift(traj.records.iter().map(|r| r.total[0]));
    let volume = relative_drift(traj.records.iter().map(|r| r.volume));
    let vc = traj.vorticity_consistency.iter().copied().fold(0.0, f64::max);
    ensure(
        ok_setup
            && traj.termination == Termination::Completed
            && traj.records.len() == 51
            && energy < 5e-3
            && volume < 1e-4
            && vc < 0.02
            && secs < 600.0,
        format!(
            "{} records, E0 drift {energy:.3e}, volume drift {volume:.3e}, vorticity consistency {vc:.3e}; {secs:.0} s",
            traj.records.len()
        ),
    )
}

fn run_scenario(name: &str, dir: &std::path::Path, overrides: Overrides) -> Result<(i32, RunSummary, String), String> {
    let out = dir.join(name);
    let code = cmd_run(&RunConfig {
        scenario: scenario_path(&format!("{name}.json")),
        output: Some(out.clone()),
        force: false,
        overrides,
        export_fields: false,
    });
    let summary: RunSummary =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).map_err(err)?).map_err(err)?;
    let csv = fs::read_to_string(out.join("diagnostics.csv")).map_err(err)?;
    Ok((code, summary, csv))
}

fn trapezoid(records: &[DiagnosticsRecord]) -> f64 {
    let f = |r: &DiagnosticsRecord| r.a * r.a + r.grad_n_dtp_sup;
    records.windows(2).map(|w| 0.5 * (w[1].t - w[0].t) * (f(&w[0]) + f(&w[1]))).sum()
}

fn monitor_semantics() -> Check {
    let tmp = tempfile::tempdir().map_err(err)?;
    let (code, rot, csv) = run_scenario("rotation", tmp.path(), Overrides::default())?;
    let rot_records = parse_csv(&csv).map_err(err)?;
    let margin = rot_records[0].taylor_margin;
    let rot_ok = code == 2
        && rot.termination == "taylor_sign"
        && rot_records.len() == 1
        && ((margin + 2.0 / 3.0) / (2.0 / 3.0)).abs() < 0.05;

    let (code, zero, csv) = run_scenario("zero", tmp.path(), Overrides::default())?;
    let zero_ok = code == 0 && zero.termination == "completed" && parse_csv(&csv).map_err(err)?.len() == 11 && zero.breakdown_integral == 0.0;

    let (code, strain, csv) = run_scenario("strain", tmp.path(), Overrides::default())?;
    let records = parse_csv(&csv).map_err(err)?;
    let hand = trapezoid(&records);
    let gap = (strain.breakdown_integral - hand).abs();
    let strain_ok = code == 0 && strain.termination == "completed" && strain.breakdown_integral.is_finite() && gap <= 1e-12;
    ensure(
        rot_ok && zero_ok && strain_ok,
        format!(
            "rotation {} margin {margin:.4}; zero {} integral {}; strain {} integral {:.6e} (hand {hand:.6e}, gap {gap:.1e})",
            rot.termination, zero.termination, zero.breakdown_integral, strain.termination, strain.breakdown_integral
        ),
    )
}

fn inequality_suite() -> Check {
    let report = run_verify(&VerifyConfig::default()).map_err(err)?;
    let checked = ["div_curl", "trace", "poincare", "poincare_gradient"];
    let finite = report.entries.iter().filter(|e| checked.contains(&e.name.as_str())).all(|e| e.ratio.is_finite());
    let mut spread = 0.0f64;
    for name in checked {
        for field in ["grad_xyz", "rotation", "shear"] {
            let c: Vec<f64> = BALL_RADII
                .iter()
                .filter_map(|r| {
                    let case = format!("ball_r{r}/{field}");
                    report.entries.iter().find(|e| e.name == name && e.case == case).map(|e| e.fitted_constant)
                })
                .collect();
            if c.len() != BALL_RADII.len() {
                return Err(format!("missing {name} {field} constants"));
            }
            let mean = c.iter().sum::<f64>() / c.len() as f64;
            let s = c.iter().map(|v| if mean != 0.0 { (v / mean - 1.0).abs() } else { v.abs() }).fold(0.0, f64::max);
            spread = spread.max(s);
        }
    }
    let identity = report
        .entries
        .iter()
        .filter(|e| e.name == "boundary_identity" && e.case.starts_with("ball_r1/"))
        .map(|e| e.ratio)
        .fold(0.0, f64::max);
    ensure(
        finite && spread <= 0.2 && identity < 0.05,
        format!("{} entries finite {finite}, ball-family spread {spread:.3}, boundary identity {identity:.3e}", report.entries.len()),
    )
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(err)?;
    let short = Overrides { t_end: Some(0.05), ..Default::default() };
    let (_, _, a) = run_scenario("strain", &tmp.path().join("a"), short)?;
    let (_, _, b) = run_scenario("strain", &tmp.path().join("b"), short)?;
    ensure(a == b && !a.is_empty(), format!("{} bytes, identical {}", a.len(), a == b))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("DtN spectral oracle", dtn_spectrum),
        ("Green's function oracle", green_oracle),
        ("Poisson convergence", poisson_convergence),
        ("geometry oracles", geometry_oracles),
        ("Bernstein suite", bernstein_suite),
        ("BKM log-check scaling", bkm_scaling_check),
        ("conservation", conservation),
        ("monitor semantics", monitor_semantics),
        ("inequality suite", inequality_suite),
        ("determinism", determinism),
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {n:>2} {name}: PASS ({d}) [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("criterion {n:>2} {name}: FAIL ({d}) [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
