//! Regime tables produced through the runner, end to end.

use saddle_cli::{cmd_run, cmd_sweep, ExperimentConfig, Overrides, RunSummary};
use saddle_core::RegimeLabel;

fn overrides(dir: &tempfile::TempDir) -> Overrides {
    Overrides { out: Some(dir.path().into()), ..Default::default() }
}

fn converged_norm(s: &RunSummary) -> Option<f64> {
    match &s.regime {
        RegimeLabel::Converged { point, .. } => Some(point.norm()),
        _ => None,
    }
}

#[test]
fn figure1_grid_on_wider_box_cycles() {
    let cfg = ExperimentConfig::from_toml(
        r#"
        [problem]
        name = "figure1"
        a = 10.0
        [algorithm]
        scheme = "ppm"
        eta = 40.0
        max_iter = 1500
        [init]
        kind = "grid"
        lo = [-4.0, -4.0]
        hi = [4.0, 4.0]
        resolution = 5
        "#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let r = cmd_run(&cfg, &overrides(&dir)).unwrap();
    let files = std::fs::read_dir(dir.path()).unwrap().filter(|e| {
        e.as_ref().unwrap().file_name().to_string_lossy().starts_with("traj_")
    });
    assert_eq!(files.count(), 25);
    for s in &r.summaries {
        if s.z0.iter().all(|&c| c == 0.0) {
            // The origin is stationary, so it cannot leave.
            assert_eq!(s.label, "converged");
        } else {
            assert_eq!(s.label, "cycle", "start {:?}", s.z0);
        }
    }
}

#[test]
fn undamped_quadratic_diverges() {
    let cfg = ExperimentConfig::from_toml(
        r#"
        [problem]
        name = "rotational_quadratic"
        rho = 1.0
        a = 2.0
        [algorithm]
        scheme = "ppm"
        eta = 3.0
        lambda = 1.0
        max_iter = 1000
        [init]
        kind = "points"
        points = [[1.0, 0.0]]
        "#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cmd_run(&cfg, &overrides(&dir)).unwrap().summaries[0].label, "diverged");
}

#[test]
fn interaction_sweep_on_figure1() {
    let cfg = ExperimentConfig::from_toml(
        r#"
        [problem]
        name = "figure1"
        a = 1.0
        [algorithm]
        scheme = "ppm"
        eta = 40.0
        max_iter = 1500
        [init]
        kind = "points"
        points = [[3.0, 3.0], [-1.0, 2.5]]
        [sweep]
        parameter = "a"
        values = [1.0, 10.0, 100.0, 1000.0]
        "#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let rows = cmd_sweep(&cfg, &overrides(&dir)).unwrap().summaries;
    assert_eq!(rows.len(), 8);
    for s in &rows {
        let a = s.parameter.as_ref().unwrap().value;
        match a {
            1.0 => assert!(converged_norm(s).unwrap() > 1.0, "a=1 settles in a well"),
            10.0 => assert_eq!(s.label, "cycle"),
            _ => assert!(converged_norm(s).unwrap() < 1e-6, "a={a} reaches the origin"),
        }
        if s.label == "converged" {
            assert!(s.contraction.unwrap() < 1.0);
        }
    }
}

#[test]
fn damping_sweep_on_quadratic() {
    let cfg = ExperimentConfig::from_toml(
        r#"
        [problem]
        name = "rotational_quadratic"
        rho = 1.0
        a = 2.0
        [algorithm]
        scheme = "ppm"
        eta = 3.0
        max_iter = 10000
        [init]
        kind = "points"
        points = [[1.0, 0.0]]
        [sweep]
        parameter = "lambda"
        values = [0.5, 0.79, 0.8, 1.0]
        "#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let labels: Vec<String> = cmd_sweep(&cfg, &overrides(&dir)).unwrap().summaries.into_iter().map(|s| s.label).collect();
    assert_eq!(labels, ["converged", "converged", "cycle", "diverged"]);
}
