//! Turns a configuration into trajectories and per-run summaries. No I/O
//! happens here; see [`crate::output`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use saddle_core::diagnostics::{classify, init_weak, weak_regime_check, RegimeLabel, WeakRegimeReport};
use saddle_core::{run, BoxDomain, DVector, MinimaxProblem, SplitPoint, Termination, Trajectory};

use crate::config::{ExperimentConfig, InitSection, SweepParameter};
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterValue {
    pub name: SweepParameter,
    pub value: f64,
}

/// One line of the summary file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parameter: Option<ParameterValue>,
    pub init_index: usize,
    pub z0: Vec<f64>,
    pub label: String,
    pub regime: RegimeLabel,
    pub termination: Termination,
    pub iterations: usize,
    pub final_point: Vec<f64>,
    pub final_grad_norm: f64,
    /// Geometric-mean per-step decay of `‖∇L‖` over the second half of a
    /// converged run.
    pub contraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weak: Option<WeakRegimeReport>,
}

pub struct RunOutput {
    pub summary: RunSummary,
    pub trajectory: Trajectory,
}

impl RunOutput {
    pub fn failed(&self) -> bool {
        matches!(self.summary.termination, Termination::Failed(_))
    }
}

/// Initial points for `cfg`, with the weak-regime report when applicable.
pub fn initial_points(
    cfg: &ExperimentConfig,
    problem: &dyn MinimaxProblem,
    seed: u64,
) -> CliResult<(Vec<SplitPoint>, Option<WeakRegimeReport>)> {
    let (n, m) = problem.dims();
    let stacked = |v: &[f64], key: &str| -> CliResult<SplitPoint> {
        if v.len() != n + m {
            return Err(CliError::Config(format!("{key}: expected {} coordinates, got {}", n + m, v.len())));
        }
        Ok(SplitPoint::from_stacked(&DVector::from_column_slice(v), n))
    };
    let domain = |lo: &[f64], hi: &[f64]| -> CliResult<BoxDomain> {
        if lo.len() != n + m || hi.len() != n + m {
            return Err(CliError::Config(format!("init.lo and init.hi need {} coordinates", n + m)));
        }
        BoxDomain::new(lo.to_vec(), hi.to_vec()).map_err(|e| CliError::Config(format!("init: {e}")))
    };
    Ok(match &cfg.init {
        InitSection::Points { points } => {
            (points.iter().map(|p| stacked(p, "init.points")).collect::<CliResult<_>>()?, None)
        }
        InitSection::Grid { lo, hi, resolution } => (domain(lo, hi)?.grid(n, *resolution), None),
        InitSection::Random { lo, hi, count } => {
            let d = domain(lo, hi)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts = (0..*count)
                .map(|_| {
                    let v = DVector::from_fn(n + m, |k, _| rng.gen_range(d.lo[k]..=d.hi[k]));
                    SplitPoint::from_stacked(&v, n)
                })
                .collect();
            (pts, None)
        }
        InitSection::Weak { z_prime, tol } => {
            let zp = stacked(z_prime, "init.z_prime")?;
            let eta = cfg.algorithm.resolve(problem, false)?.effective_eta(problem)?;
            let z0 = init_weak(problem, &zp, eta, *tol)?;
            let report = weak_regime_check(problem, &zp, &z0, eta, None).ok();
            (vec![z0], report)
        }
    })
}

/// Geometric-mean ratio `(g_K / g_h)^{1/(K−h)}` with `h = K/2`, skipping
/// trailing exact zeros.
pub fn contraction_factor(traj: &Trajectory) -> Option<f64> {
    let g: Vec<f64> = traj.diagnostics.iter().map(|d| d.grad_norm).take_while(|&v| v > 0.0).collect();
    let k = g.len().checked_sub(1)?;
    let h = k / 2;
    if k == h {
        return None;
    }
    let f = (g[k] / g[h]).powf(1.0 / (k - h) as f64);
    f.is_finite().then_some(f)
}

/// Runs every initialization of a single (non-swept) configuration.
pub fn execute(cfg: &ExperimentConfig, seed: u64, lyapunov: bool) -> CliResult<Vec<RunOutput>> {
    let problem = cfg.problem.build()?;
    let algo = cfg.algorithm.resolve(problem.as_ref(), lyapunov || cfg.output.lyapunov)?;
    let (points, weak) = initial_points(cfg, problem.as_ref(), seed)?;
    points
        .par_iter()
        .enumerate()
        .map(|(i, z0)| {
            let trajectory = run(problem.as_ref(), &algo, z0)?;
            let regime = classify(&trajectory, &cfg.classify);
            let contraction = match regime {
                RegimeLabel::Converged { .. } => contraction_factor(&trajectory),
                _ => None,
            };
            let last = trajectory.last();
            let summary = RunSummary {
                parameter: None,
                init_index: i,
                z0: z0.stacked().as_slice().to_vec(),
                label: regime.name().to_string(),
                regime,
                termination: trajectory.termination.clone(),
                iterations: trajectory.steps(),
                final_point: last.stacked().as_slice().to_vec(),
                final_grad_norm: trajectory.final_grad_norm(),
                contraction,
                weak: weak.clone(),
            };
            Ok(RunOutput { summary, trajectory })
        })
        .collect()
}

/// Runs the sweep, or the plain configuration when there is none. Results
/// are ordered by (parameter index, init index) regardless of scheduling.
pub fn execute_sweep(cfg: &ExperimentConfig, seed: u64, lyapunov: bool) -> CliResult<Vec<Vec<RunOutput>>> {
    let Some(sweep) = &cfg.sweep else {
        return Ok(vec![execute(cfg, seed, lyapunov)?]);
    };
    let configs = sweep
        .values
        .iter()
        .map(|&v| cfg.with_parameter(sweep.parameter, v))
        .collect::<CliResult<Vec<_>>>()?;
    configs
        .par_iter()
        .zip(&sweep.values)
        .map(|(c, &v)| {
            let mut outs = execute(c, seed, lyapunov)?;
            for o in &mut outs {
                o.summary.parameter = Some(ParameterValue { name: sweep.parameter, value: v });
            }
            Ok(outs)
        })
        .collect()
}
