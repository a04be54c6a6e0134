use serde::{Deserialize, Serialize};

use crate::algorithms::{Termination, Trajectory};
use crate::problems::SplitPoint;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "lowercase")]
pub enum RegimeLabel {
    Converged { point: SplitPoint, grad_norm: f64 },
    Cycle { period: usize, radius: f64, recurrence: f64 },
    Diverged,
    Undetermined,
}

impl RegimeLabel {
    pub fn name(&self) -> &'static str {
        match self {
            RegimeLabel::Converged { .. } => "converged",
            RegimeLabel::Cycle { .. } => "cycle",
            RegimeLabel::Diverged => "diverged",
            RegimeLabel::Undetermined => "undetermined",
        }
    }

    pub fn is_cycle(&self) -> bool {
        matches!(self, RegimeLabel::Cycle { .. })
    }

    pub fn converged_point(&self) -> Option<&SplitPoint> {
        match self {
            RegimeLabel::Converged { point, .. } => Some(point),
            _ => None,
        }
    }
}

/// Recurrence-based limit-cycle detector settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyOptions {
    /// Overrides the trajectory's own stopping tolerance.
    pub grad_tol: Option<f64>,
    /// Overrides the adaptive recurrence tolerance.
    pub cycle_tol: Option<f64>,
    pub burn_in: usize,
    pub window: usize,
    pub min_lag: usize,
    /// Allowed relative change of the orbit's RMS spread between the two
    /// halves of the window.
    pub spread_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { grad_tol: None, cycle_tol: None, burn_in: 500, window: 400, min_lag: 2, spread_tol: 0.1 }
    }
}

fn rms_spread(points: &[SplitPoint]) -> f64 {
    let k = points.len() as f64;
    let mut center = points[0].stacked() * 0.0;
    for p in points {
        center += p.stacked();
    }
    center /= k;
    (points.iter().map(|p| (p.stacked() - &center).norm_squared()).sum::<f64>() / k).sqrt()
}

/// Labels a trajectory, checking Diverged, Converged, Cycle in that order.
///
/// A cycle needs, inside the last `window` iterates after `burn_in`: the
/// gradient norm bounded away from `grad_tol`, some pair of iterates at lag
/// at least `min_lag` within `cycle_tol` of each other, a nonzero orbit
/// diameter, and an RMS spread that is neither shrinking nor growing. The
/// default `cycle_tol` is `max(1e-4·(1 + mean‖z‖), 4·diameter/window)`, the
/// second term covering quasi-periodic orbits whose returns are only as close
/// as the sampling density along the orbit.
pub fn classify(traj: &Trajectory, opts: &ClassifyOptions) -> RegimeLabel {
    let grad_tol = opts.grad_tol.unwrap_or(traj.grad_tol);
    if traj.termination == Termination::Diverged || traj.last().norm() > traj.diverge_radius || !traj.last().is_finite() {
        return RegimeLabel::Diverged;
    }
    let g = traj.final_grad_norm();
    if g <= grad_tol {
        return RegimeLabel::Converged { point: traj.last().clone(), grad_norm: g };
    }
    if traj.iterates.len() < opts.burn_in + opts.window || opts.window <= opts.min_lag || opts.window < 4 {
        return RegimeLabel::Undetermined;
    }
    let start = traj.iterates.len() - opts.window;
    let window = &traj.iterates[start..];
    if traj.diagnostics[start..].iter().any(|d| !(d.grad_norm > grad_tol)) {
        return RegimeLabel::Undetermined;
    }

    let dim = window[0].x.len() + window[0].y.len();
    let flat: Vec<f64> = window.iter().flat_map(|z| z.x.iter().chain(z.y.iter()).copied()).collect();
    let mut diameter2 = 0.0f64;
    let mut best = (f64::INFINITY, 0usize);
    for (i, a) in flat.chunks_exact(dim).enumerate() {
        for (off, b) in flat[(i + 1) * dim..].chunks_exact(dim).enumerate() {
            let d2: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
            diameter2 = diameter2.max(d2);
            if off + 1 >= opts.min_lag && d2 < best.0 {
                best = (d2, off + 1);
            }
        }
    }
    if !(diameter2 > 0.0) {
        return RegimeLabel::Undetermined;
    }
    let (diameter, best) = (diameter2.sqrt(), (best.0.sqrt(), best.1));
    let mean_norm = window.iter().map(|z| z.norm()).sum::<f64>() / window.len() as f64;
    let cycle_tol =
        opts.cycle_tol.unwrap_or_else(|| (1e-4 * (1.0 + mean_norm)).max(4.0 * diameter / opts.window as f64));
    let half = window.len() / 2;
    let (first, second) = (rms_spread(&window[..half]), rms_spread(&window[half..]));
    let steady = first > 0.0 && (second / first - 1.0).abs() <= opts.spread_tol;
    if best.0 <= cycle_tol && steady {
        RegimeLabel::Cycle { period: best.1, radius: rms_spread(window), recurrence: best.0 }
    } else {
        RegimeLabel::Undetermined
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{run, AlgoConfig, StepDiagnostics};
    use crate::problems::{make_figure1_problem, RotationalQuadratic};

    fn synthetic(points: Vec<SplitPoint>, grad: f64, termination: Termination) -> Trajectory {
        let diagnostics = points
            .iter()
            .map(|_| StepDiagnostics { grad_norm: grad, step_norm: 0.1, lyapunov: None, env_grad_norm: None })
            .collect();
        Trajectory {
            iterates: points,
            diagnostics,
            config: AlgoConfig::ppm(1.0, 1.0),
            termination,
            grad_tol: 1e-8,
            diverge_radius: 1e8,
            projected: false,
        }
    }

    #[test]
    fn periodic_orbit_is_a_cycle() {
        let pts: Vec<_> = (0..1000)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * (k % 7) as f64 / 7.0;
                SplitPoint::scalar(t.cos(), t.sin())
            })
            .collect();
        match classify(&synthetic(pts, 1.0, Termination::Budget), &ClassifyOptions::default()) {
            RegimeLabel::Cycle { period, radius, recurrence } => {
                assert_eq!(period, 7);
                assert!((radius - 1.0).abs() < 1e-2);
                assert!(recurrence < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn slow_spiral_is_not_a_cycle() {
        let pts: Vec<_> = (0..1000)
            .map(|k| {
                let t = 0.3 * k as f64;
                let r = 0.999f64.powi(k);
                SplitPoint::scalar(r * t.cos(), r * t.sin())
            })
            .collect();
        assert_eq!(classify(&synthetic(pts, 1.0, Termination::Budget), &ClassifyOptions::default()), RegimeLabel::Undetermined);
    }

    #[test]
    fn precedence_and_short_runs() {
        let pts = vec![SplitPoint::scalar(1.0, 1.0); 1000];
        assert_eq!(classify(&synthetic(pts.clone(), 1.0, Termination::Diverged), &ClassifyOptions::default()), RegimeLabel::Diverged);
        assert!(matches!(classify(&synthetic(pts.clone(), 0.0, Termination::Budget), &ClassifyOptions::default()),
            RegimeLabel::Converged { .. }));
        // Constant but non-stationary: zero diameter, not a cycle.
        assert_eq!(classify(&synthetic(pts, 1.0, Termination::Budget), &ClassifyOptions::default()), RegimeLabel::Undetermined);
        let short = vec![SplitPoint::scalar(1.0, 1.0); 10];
        assert_eq!(classify(&synthetic(short, 1.0, Termination::Budget), &ClassifyOptions::default()), RegimeLabel::Undetermined);
    }

    #[test]
    fn figure1_regimes_from_one_start() {
        let z0 = SplitPoint::scalar(3.0, 3.0);
        let opts = ClassifyOptions::default();
        let label = |a: f64| {
            let p = make_figure1_problem(a).unwrap();
            classify(&run(&p, &AlgoConfig::ppm(40.0, 1.0).with_max_iter(1500), &z0).unwrap(), &opts)
        };
        let p = label(1.0).converged_point().cloned().expect("a = 1 converges");
        assert!((p.x[0].abs() - 2.2).abs() < 0.2 && (p.y[0].abs() - 2.2).abs() < 0.2);
        assert!(label(10.0).is_cycle());
        let origin = label(100.0).converged_point().cloned().expect("a = 100 converges");
        assert!(origin.norm() < 1e-6);
    }

    #[test]
    fn quadratic_boundary_is_a_cycle() {
        // λ = 0.8 gives a pure rotation on the circle of radius ‖z₀‖.
        let p = RotationalQuadratic::new(1.0, 2.0, 1).unwrap();
        let t = run(&p, &AlgoConfig::ppm(3.0, 0.8).with_max_iter(1200), &SplitPoint::scalar(1.0, 0.0)).unwrap();
        assert!(classify(&t, &ClassifyOptions::default()).is_cycle());
    }
}
