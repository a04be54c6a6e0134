//! Shared fixtures for the criterion benchmarks.

use saddle_core::{make_figure1_problem, CoupledSeparable, RotationalQuadratic, SplitPoint};

pub const FIGURE1_ETA: f64 = 40.0;

pub fn figure1(a: f64) -> CoupledSeparable {
    make_figure1_problem(a).expect("valid interaction strength")
}

pub fn quadratic(n: usize) -> RotationalQuadratic {
    RotationalQuadratic::new(1.0, 2.0, n).expect("valid quadratic")
}

/// Deterministic off-equilibrium start inside the quartic-well box.
pub fn start() -> SplitPoint {
    SplitPoint::scalar(1.75, -2.5)
}

pub fn quadratic_start(n: usize) -> SplitPoint {
    let v: Vec<f64> = (0..n).map(|i| 1.0 - 0.3 * i as f64).collect();
    SplitPoint::from_slices(&v, &v.iter().rev().copied().collect::<Vec<_>>())
}
