//! End-to-end sweeps on small meshes.

use quasidisc::disc::SolverConfig;
use quasidisc::harness::{report_csv, report_json, report_svg, run_sweep, verify_bound, SweepSpec};

fn small_spec(t_values: Vec<f64>) -> SweepSpec {
    SweepSpec {
        t_values,
        solver: SolverConfig {
            target_vertices: 2500,
            ..SolverConfig::default()
        },
        threads: 2,
        ..SweepSpec::default()
    }
}

#[test]
fn small_sweep_rows_are_consistent() {
    let spec = small_spec(vec![0.03, 0.06, 0.09]);
    let rep = run_sweep(&spec).unwrap();
    assert_eq!(rep.fitted_rows, 3);
    for r in &rep.records {
        assert!(r.converged, "{:?}", r.error);
        assert!((r.width - (2.0 * r.bers_norm).atanh()).abs() < 1e-6);
        assert!((r.bers_norm - 1.5 * r.t).abs() < 1e-9);
        assert!((r.teich_dist - 0.5 * r.k_upper.ln()).abs() < 1e-12);
        for v in [r.sup_lambda, r.pde_residual, r.hull_violation, r.harmonic_residual] {
            assert!(v.is_finite());
        }
    }
    assert!(rep.c_fit > 0.0 && rep.c_fit.is_finite());
    assert!(verify_bound(&rep).unwrap().pass);

    // rows come back in parameter order whatever the thread count
    let serial = run_sweep(&SweepSpec { threads: 1, ..spec }).unwrap();
    assert_eq!(report_csv(&serial).unwrap(), report_csv(&rep).unwrap());
    assert_eq!(report_json(&serial).unwrap(), report_json(&rep).unwrap());
    assert_eq!(report_svg(&serial), report_svg(&rep));
}

#[test]
fn failing_rows_are_recorded_not_fitted() {
    // c1 = 0.4 has Bers norm 0.6, past the dilatation bound
    let rep = run_sweep(&small_spec(vec![0.05, 0.4])).unwrap();
    assert_eq!(rep.fitted_rows, 1);
    let bad = &rep.records[1];
    assert!(!bad.converged);
    assert!(bad.error.is_some());
    assert!(bad.sup_lambda == 0.0 && bad.k_upper == 0.0);
    assert!(report_csv(&rep).unwrap().lines().nth(2).unwrap().ends_with(",false"));
}

#[test]
fn sweep_without_converged_rows_is_an_error() {
    assert!(run_sweep(&small_spec(vec![0.4])).is_err());
    assert!(run_sweep(&small_spec(vec![])).is_err());
}
