use std::sync::OnceLock;

use freesurf::fields::{build_sampling, poisson_dirichlet, BoundaryData};
use freesurf::geometry::shapes::{ellipsoid, icosphere};
use freesurf::geometry::{second_fundamental_form, Mat3, Vec3};
use freesurf::potential::{assemble, LayerOperator};
use proptest::prelude::*;

fn sphere_operator() -> &'static LayerOperator {
    static OP: OnceLock<LayerOperator> = OnceLock::new();
    OP.get_or_init(|| assemble(&icosphere(2, 1.0).unwrap()).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn curvature_area_and_volume_scale(lambda in 0.2f64..5.0) {
        let base = ellipsoid([1.3, 1.0, 0.8], 2).unwrap();
        let m = base.scaled(lambda).unwrap();
        let c0 = second_fundamental_form(&base).unwrap();
        let c = second_fundamental_form(&m).unwrap();
        for (k, k0) in c.principal_curvatures.iter().zip(&c0.principal_curvatures) {
            prop_assert!(rel(k[0] * lambda, k0[0]) < 1e-9);
            prop_assert!(rel(k[1] * lambda, k0[1]) < 1e-9);
        }
        prop_assert!(rel(m.total_area(), lambda * lambda * base.total_area()) < 1e-12);
        prop_assert!(rel(m.signed_volume(), lambda.powi(3) * base.signed_volume()) < 1e-12);
    }

    #[test]
    fn dtn_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
        let op = sphere_operator();
        let n = op.mesh().n_vertices();
        let f = |i: usize, s: u64| (((i as u64 + 1) * (s + 7) % 97) as f64 / 97.0) - 0.5;
        let psi: Vec<f64> = (0..n).map(|i| f(i, seed)).collect();
        let phi: Vec<f64> = (0..n).map(|i| f(i, seed + 13)).collect();
        let mix: Vec<f64> = psi.iter().zip(&phi).map(|(x, y)| a * x + b * y).collect();
        let (np, nf, nm) = (op.dtn(&psi).unwrap(), op.dtn(&phi).unwrap(), op.dtn(&mix).unwrap());
        let scale = np.iter().chain(&nf).map(|v| v.abs()).fold(0.0, f64::max) * (a.abs() + b.abs() + 1.0);
        for i in 0..n {
            prop_assert!((nm[i] - a * np[i] - b * nf[i]).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn dtn_of_constants_vanishes(c in -10.0f64..10.0) {
        let op = sphere_operator();
        let n = op.dtn(&vec![c; op.mesh().n_vertices()]).unwrap();
        prop_assert!(n.iter().all(|v| v.abs() <= 1e-8 * c.abs().max(1.0)));
    }
}

#[test]
fn quarter_turn_commutes_with_sampling_and_poisson() {
    let mesh = ellipsoid([1.3, 1.0, 0.8], 3).unwrap();
    let turn = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let turned = mesh.transformed(&turn, &Vec3::zeros()).unwrap();
    let h = 0.08;
    let s = build_sampling(&mesh, h).unwrap();
    let t = build_sampling(&turned, h).unwrap();
    assert_eq!(s.inside_cells().len(), t.inside_cells().len());
    let f = s.sample(1, |x| vec![1.0 + x.z]);
    let g = t.sample(1, |x| vec![1.0 + x.z]);
    let qs = poisson_dirichlet(&s, &f, BoundaryData::Zero).unwrap().field;
    let qt = poisson_dirichlet(&t, &g, BoundaryData::Zero).unwrap().field;
    let mut worst_phi = 0.0f64;
    let mut worst_q = 0.0f64;
    for &c in s.inside_cells() {
        let [i, j, k] = s.grid().global(c);
        let d = t.grid().cell_of_global([-j, i, k]).expect("turned cell exists");
        worst_phi = worst_phi.max((s.phi()[c] - t.phi()[d]).abs());
        worst_q = worst_q.max((qs.get(c, 0) - qt.get(d, 0)).abs());
    }
    assert!(worst_phi < 1e-12, "{worst_phi:e}");
    assert!(worst_q < 1e-8, "{worst_q:e}");
}
