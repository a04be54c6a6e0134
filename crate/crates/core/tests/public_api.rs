//! End-to-end use of the public API, independent of the unit tests.

use std::sync::Arc;

use saddle_core::diagnostics::{lyapunov, quadratic_oracle};
use saddle_core::envelope::{dominance, envelope_grad};
use saddle_core::suites::{run_suite, SUITES};
use saddle_core::{
    classify, finite_diff_problem, make_figure1_problem, prox, run, AlgoConfig, ClassifyOptions, Constants,
    RegimeLabel, RotationalQuadratic, SplitPoint, StepPolicy, Termination, Trajectory,
};

#[test]
fn every_builtin_suite_passes() {
    for name in SUITES {
        for o in run_suite(name, 11).unwrap() {
            assert!(o.passed, "{name}: {} measured {} vs {}", o.name, o.measured, o.threshold);
        }
    }
}

#[test]
fn value_only_problem_matches_analytic_twin() {
    // L = x² − y² + 3xy, written only as a value function.
    let f = Arc::new(|z: &SplitPoint| z.x[0] * z.x[0] - z.y[0] * z.y[0] + 3.0 * z.x[0] * z.y[0]);
    let constants = Constants {
        rho: 0.0,
        beta: 4.0,
        lipschitz_hessian: Some(0.0),
        interaction_bound: Some(3.0),
        interaction_lipschitz: Some(0.0),
        domain: None,
    };
    let fd = finite_diff_problem(f, 1, 1, StepPolicy::default(), constants).unwrap();
    let z = SplitPoint::scalar(0.7, -1.2);
    let zp = prox(&fd, &z, 1.0, None).unwrap().z_plus;
    // Prox stationarity with η = 1: 3u + 3v = x and 3u − 3v = −y.
    let (u, v) = ((z.x[0] - z.y[0]) / 6.0, (z.x[0] + z.y[0]) / 6.0);
    assert!((zp.x[0] - u).abs() < 1e-6 && (zp.y[0] - v).abs() < 1e-6);
    let g = envelope_grad(&fd, &z, 1.0, None).unwrap().grad;
    assert!((g.x[0] - (z.x[0] - u)).abs() < 1e-6 && (g.y[0] - (v - z.y[0])).abs() < 1e-6);
    assert!(dominance(&fd, &z, 1.0).unwrap().alpha() > 0.0);
}

#[test]
fn quadratic_run_follows_oracle() {
    let p = RotationalQuadratic::new(1.0, 2.0, 2).unwrap();
    let o = quadratic_oracle(1.0, 2.0, 3.0, 0.5).unwrap();
    let z0 = SplitPoint::from_slices(&[1.0, -1.0], &[0.5, 2.0]);
    let traj = run(&p, &AlgoConfig::ppm(3.0, 0.5).with_max_iter(20), &z0).unwrap();
    for w in traj.iterates.windows(2) {
        assert!((w[1].norm() / w[0].norm() - o.factor.sqrt()).abs() < 1e-10);
    }
}

#[test]
fn trajectories_round_trip_through_json() {
    let p = make_figure1_problem(10.0).unwrap();
    let mut cfg = AlgoConfig::ppm(40.0, 1.0).with_max_iter(30);
    cfg.record_lyapunov = true;
    let traj = run(&p, &cfg, &SplitPoint::scalar(1.0, 2.0)).unwrap();
    let text = serde_json::to_string(&traj).unwrap();
    let back: Trajectory = serde_json::from_str(&text).unwrap();
    assert_eq!(back, traj);
    assert_eq!(traj.termination, Termination::Budget);
    let l0 = traj.diagnostics[0].lyapunov.unwrap();
    assert!((l0 - lyapunov(&p, &traj.iterates[0], 40.0, None).unwrap()).abs() < 1e-9);
}

#[test]
fn labels_serialize_with_regime_tag() {
    let p = make_figure1_problem(100.0).unwrap();
    let traj = run(&p, &AlgoConfig::ppm(40.0, 1.0).with_max_iter(500), &SplitPoint::scalar(3.0, -1.0)).unwrap();
    let label = classify(&traj, &ClassifyOptions::default());
    assert!(matches!(label, RegimeLabel::Converged { .. }));
    let v = serde_json::to_value(&label).unwrap();
    assert_eq!(v["regime"], "converged");
}
