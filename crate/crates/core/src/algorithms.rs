//! Outer iteration schemes and the trajectory run loop.

use serde::{Deserialize, Serialize};

use crate::diagnostics::lyapunov;
use crate::envelope::envelope_grad;
use crate::error::{param, Error, Result};
use crate::problems::{BoxDomain, MinimaxProblem, SplitPoint};
use crate::prox::{check_eta, prox};

/// Default half-width of the projection box used by [`Scheme::Gda2`].
pub const DEFAULT_GDA2_BOX: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Damped proximal point method.
    Ppm,
    /// Proximal point with separate x and y damping.
    Ppm2,
    /// Simultaneous gradient descent-ascent.
    Gda,
    /// Two-stepsize gradient descent-ascent with y projected onto a box.
    Gda2,
    /// Alternating gradient descent-ascent.
    Agda,
    /// Extragradient.
    Egm,
}

impl Scheme {
    pub fn is_proximal(self) -> bool {
        matches!(self, Scheme::Ppm | Scheme::Ppm2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgoConfig {
    pub scheme: Scheme,
    /// Proximal parameter; defaults to `2ρ` for the proximal schemes.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default)]
    pub eta_x: Option<f64>,
    #[serde(default)]
    pub eta_y: Option<f64>,
    /// Projection box for the y-block of [`Scheme::Gda2`].
    #[serde(default)]
    pub y_box: Option<BoxDomain>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Defaults to `1e-8 · max(1, ‖∇L(z₀)‖)`.
    #[serde(default)]
    pub grad_tol: Option<f64>,
    /// Defaults to `1e8 · (1 + ‖z₀‖)`.
    #[serde(default)]
    pub diverge_radius: Option<f64>,
    /// Prox tolerance; defaults per point to `1e-10 · max(1, ‖∇L(z)‖)`.
    #[serde(default)]
    pub inner_tol: Option<f64>,
    #[serde(default)]
    pub record_lyapunov: bool,
}

fn one() -> f64 {
    1.0
}

fn default_max_iter() -> usize {
    1000
}

impl AlgoConfig {
    pub fn new(scheme: Scheme) -> Self {
        Self {
            scheme,
            eta: None,
            lambda: 1.0,
            gamma: 1.0,
            s: None,
            eta_x: None,
            eta_y: None,
            y_box: None,
            max_iter: default_max_iter(),
            grad_tol: None,
            diverge_radius: None,
            inner_tol: None,
            record_lyapunov: false,
        }
    }

    pub fn ppm(eta: f64, lambda: f64) -> Self {
        Self { eta: Some(eta), lambda, ..Self::new(Scheme::Ppm) }
    }

    pub fn ppm2(eta: f64, lambda: f64, gamma: f64) -> Self {
        Self { eta: Some(eta), lambda, gamma, ..Self::new(Scheme::Ppm2) }
    }

    pub fn gradient(scheme: Scheme, s: f64) -> Self {
        Self { s: Some(s), ..Self::new(scheme) }
    }

    pub fn gda2(eta_x: f64, eta_y: f64) -> Self {
        Self { eta_x: Some(eta_x), eta_y: Some(eta_y), ..Self::new(Scheme::Gda2) }
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    /// The proximal parameter in effect: the configured one or `2ρ`.
    pub fn effective_eta(&self, problem: &dyn MinimaxProblem) -> Result<f64> {
        match self.eta {
            Some(e) => Ok(e),
            None if problem.rho() > 0.0 => Ok(2.0 * problem.rho()),
            None => Err(param("eta is required when rho <= 0")),
        }
    }

    pub fn validate(&self, problem: &dyn MinimaxProblem) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(param(format!("{name} must lie in (0, 1], got {v}")))
            }
        };
        let positive = |name: &str, v: Option<f64>| match v {
            Some(v) if v > 0.0 && v.is_finite() => Ok(()),
            Some(v) => Err(param(format!("{name} must be positive and finite, got {v}"))),
            None => Err(param(format!("{name} is required for scheme {:?}", self.scheme))),
        };
        match self.scheme {
            Scheme::Ppm => {
                unit("lambda", self.lambda)?;
                check_eta(problem, self.effective_eta(problem)?)?;
            }
            Scheme::Ppm2 => {
                unit("lambda", self.lambda)?;
                unit("gamma", self.gamma)?;
                check_eta(problem, self.effective_eta(problem)?)?;
            }
            Scheme::Gda | Scheme::Agda | Scheme::Egm => positive("s", self.s)?,
            Scheme::Gda2 => {
                positive("eta_x", self.eta_x)?;
                positive("eta_y", self.eta_y)?;
                if let Some(b) = &self.y_box {
                    if b.dim() != problem.dims().1 {
                        return Err(Error::Dimension { expected: problem.dims().1, got: b.dim() });
                    }
                }
            }
        }
        if self.record_lyapunov {
            check_eta(problem, self.effective_eta(problem)?)?;
        }
        for (name, v) in [("grad_tol", self.grad_tol), ("diverge_radius", self.diverge_radius), ("inner_tol", self.inner_tol)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(param(format!("{name} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }
}

/// `(1 − λ)z + λ·prox_η(z)`.
pub fn ppm_step(problem: &dyn MinimaxProblem, z: &SplitPoint, eta: f64, lambda: f64, tol: Option<f64>) -> Result<SplitPoint> {
    ppm2_step(problem, z, eta, lambda, lambda, tol)
}

/// Blockwise damping: x moves by `λ`, y by `γ` toward `prox_η(z)`.
pub fn ppm2_step(
    problem: &dyn MinimaxProblem,
    z: &SplitPoint,
    eta: f64,
    lambda: f64,
    gamma: f64,
    tol: Option<f64>,
) -> Result<SplitPoint> {
    let zp = prox(problem, z, eta, tol)?.z_plus;
    Ok(SplitPoint::new(&z.x * (1.0 - lambda) + &zp.x * lambda, &z.y * (1.0 - gamma) + &zp.y * gamma))
}

/// `(x − s∇ₓL, y + s∇ᵧL)`.
pub fn gda_step(problem: &dyn MinimaxProblem, z: &SplitPoint, s: f64) -> Result<SplitPoint> {
    let g = problem.grad(z)?;
    Ok(SplitPoint::new(&z.x - g.x * s, &z.y + g.y * s))
}

/// `(x − ∇ₓL/η_x, Proj(y + ∇ᵧL/η_y))`; the flag reports whether the
/// projection moved any coordinate.
pub fn gda2_step(
    problem: &dyn MinimaxProblem,
    z: &SplitPoint,
    eta_x: f64,
    eta_y: f64,
    y_box: Option<&BoxDomain>,
) -> Result<(SplitPoint, bool)> {
    let g = problem.grad(z)?;
    let x = &z.x - g.x / eta_x;
    let mut y = &z.y + g.y / eta_y;
    let mut clamped = false;
    for (j, v) in y.iter_mut().enumerate() {
        let (lo, hi) = match y_box {
            Some(b) => (b.lo[j], b.hi[j]),
            None => (-DEFAULT_GDA2_BOX, DEFAULT_GDA2_BOX),
        };
        let c = v.clamp(lo, hi);
        clamped |= c != *v;
        *v = c;
    }
    Ok((SplitPoint::new(x, y), clamped))
}

/// `x' = x − s∇ₓL(x, y)`, then `y' = y + s∇ᵧL(x', y)`.
pub fn agda_step(problem: &dyn MinimaxProblem, z: &SplitPoint, s: f64) -> Result<SplitPoint> {
    let x = &z.x - problem.grad_x(z)? * s;
    let gy = problem.grad_y(&SplitPoint::new(x.clone(), z.y.clone()))?;
    Ok(SplitPoint::new(x, &z.y + gy * s))
}

/// Extragradient: look ahead with `z̃ = z + sF(z)`, then `z' = z + sF(z̃)`
/// where `F = (−∇ₓL, ∇ᵧL)`.
pub fn egm_step(problem: &dyn MinimaxProblem, z: &SplitPoint, s: f64) -> Result<SplitPoint> {
    let half = gda_step(problem, z, s)?;
    let g = problem.grad(&half)?;
    Ok(SplitPoint::new(&z.x - g.x * s, &z.y + g.y * s))
}

/// Two-stepsize GDA applied to the saddle envelope `L_η`, using its
/// prox-based gradient.
pub fn envelope_gda2_step(
    problem: &dyn MinimaxProblem,
    z: &SplitPoint,
    eta: f64,
    eta_x: f64,
    eta_y: f64,
    tol: Option<f64>,
) -> Result<SplitPoint> {
    let g = envelope_grad(problem, z, eta, tol)?.grad;
    Ok(SplitPoint::new(&z.x - g.x / eta_x, &z.y + g.y / eta_y))
}

/// GDA with stepsize `s` on the saddle envelope.
pub fn envelope_gda_step(problem: &dyn MinimaxProblem, z: &SplitPoint, eta: f64, s: f64, tol: Option<f64>) -> Result<SplitPoint> {
    envelope_gda2_step(problem, z, eta, 1.0 / s, 1.0 / s, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "detail", rename_all = "lowercase")]
pub enum Termination {
    Converged,
    Diverged,
    Budget,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub grad_norm: f64,
    /// `‖z_k − z_{k−1}‖`; zero for the initial point.
    pub step_norm: f64,
    pub lyapunov: Option<f64>,
    /// `‖∇L_η(z_k)‖`, available for the proximal schemes.
    pub env_grad_norm: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub iterates: Vec<SplitPoint>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub config: AlgoConfig,
    pub termination: Termination,
    pub grad_tol: f64,
    pub diverge_radius: f64,
    /// Whether the GDA2 projection was ever active.
    pub projected: bool,
}

impl Trajectory {
    pub fn last(&self) -> &SplitPoint {
        self.iterates.last().expect("trajectory always holds the initial point")
    }

    pub fn final_grad_norm(&self) -> f64 {
        self.diagnostics.last().map_or(f64::NAN, |d| d.grad_norm)
    }

    /// Number of steps taken.
    pub fn steps(&self) -> usize {
        self.iterates.len() - 1
    }
}

/// Iterates `config.scheme` from `z0` until stationarity, divergence or the
/// iteration budget. Step failures end the run with [`Termination::Failed`].
pub fn run(problem: &dyn MinimaxProblem, config: &AlgoConfig, z0: &SplitPoint) -> Result<Trajectory> {
    let (n, m) = problem.dims();
    z0.check(n, m)?;
    config.validate(problem)?;
    let eta = if config.scheme.is_proximal() || config.record_lyapunov { Some(config.effective_eta(problem)?) } else { None };
    let g0 = problem.grad_norm(z0)?;
    let grad_tol = config.grad_tol.unwrap_or(1e-8 * g0.max(1.0));
    let diverge_radius = config.diverge_radius.unwrap_or(1e8 * (1.0 + z0.norm()));

    let lyap = |z: &SplitPoint| -> Result<Option<f64>> {
        match (config.record_lyapunov, eta) {
            (true, Some(e)) => Ok(Some(lyapunov(problem, z, e, config.inner_tol)?)),
            _ => Ok(None),
        }
    };

    let mut traj = Trajectory {
        iterates: vec![z0.clone()],
        diagnostics: Vec::new(),
        config: config.clone(),
        termination: Termination::Budget,
        grad_tol,
        diverge_radius,
        projected: false,
    };
    match lyap(z0) {
        Ok(l) => traj.diagnostics.push(StepDiagnostics { grad_norm: g0, step_norm: 0.0, lyapunov: l, env_grad_norm: None }),
        Err(e) => {
            traj.diagnostics.push(StepDiagnostics { grad_norm: g0, step_norm: 0.0, lyapunov: None, env_grad_norm: None });
            traj.termination = Termination::Failed(e.to_string());
            return Ok(traj);
        }
    }

    let mut z = z0.clone();
    let mut grad_norm = g0;
    for _ in 0..config.max_iter {
        if grad_norm <= grad_tol {
            traj.termination = Termination::Converged;
            return Ok(traj);
        }
        let step = (|| -> Result<(SplitPoint, Option<f64>, bool)> {
            Ok(match config.scheme {
                Scheme::Ppm | Scheme::Ppm2 => {
                    let eta = eta.expect("validated");
                    let gamma = if config.scheme == Scheme::Ppm { config.lambda } else { config.gamma };
                    let zp = prox(problem, &z, eta, config.inner_tol)?.z_plus;
                    let env = eta * z.dist(&zp);
                    let next = SplitPoint::new(
                        &z.x * (1.0 - config.lambda) + &zp.x * config.lambda,
                        &z.y * (1.0 - gamma) + &zp.y * gamma,
                    );
                    (next, Some(env), false)
                }
                Scheme::Gda => (gda_step(problem, &z, config.s.expect("validated"))?, None, false),
                Scheme::Agda => (agda_step(problem, &z, config.s.expect("validated"))?, None, false),
                Scheme::Egm => (egm_step(problem, &z, config.s.expect("validated"))?, None, false),
                Scheme::Gda2 => {
                    let (next, clamped) = gda2_step(
                        problem,
                        &z,
                        config.eta_x.expect("validated"),
                        config.eta_y.expect("validated"),
                        config.y_box.as_ref(),
                    )?;
                    (next, None, clamped)
                }
            })
        })();
        let (next, env, clamped) = match step {
            Ok(s) => s,
            Err(e) => {
                traj.termination = Termination::Failed(e.to_string());
                return Ok(traj);
            }
        };
        if let Some(d) = traj.diagnostics.last_mut() {
            d.env_grad_norm = env;
        }
        traj.projected |= clamped;
        if !next.is_finite() || next.norm() > diverge_radius {
            traj.termination = Termination::Diverged;
            return Ok(traj);
        }
        let evaluated = problem.grad_norm(&next).and_then(|g| Ok((g, lyap(&next)?)));
        let (g, l) = match evaluated {
            Ok(v) => v,
            Err(e) => {
                traj.termination = Termination::Failed(e.to_string());
                return Ok(traj);
            }
        };
        let step_norm = next.dist(&z);
        traj.iterates.push(next.clone());
        traj.diagnostics.push(StepDiagnostics { grad_norm: g, step_norm, lyapunov: l, env_grad_norm: None });
        z = next;
        grad_norm = g;
    }
    if grad_norm <= grad_tol {
        traj.termination = Termination::Converged;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_figure1_problem, CoupledSeparable, Polynomial, RotationalQuadratic};
    use nalgebra::DMatrix;

    fn rq() -> RotationalQuadratic {
        RotationalQuadratic::new(1.0, 2.0, 1).unwrap()
    }

    fn close_pt(z: &SplitPoint, x: f64, y: f64, tol: f64) -> bool {
        (z.x[0] - x).abs() <= tol && (z.y[0] - y).abs() <= tol
    }

    #[test]
    fn ppm_examples() {
        let p = rq();
        let z = SplitPoint::scalar(1.0, 0.0);
        assert!(close_pt(&ppm_step(&p, &z, 3.0, 1.0, None).unwrap(), 0.75, 0.75, 1e-12));
        assert!(close_pt(&ppm_step(&p, &z, 3.0, 0.5, None).unwrap(), 0.875, 0.375, 1e-12));
        let origin = SplitPoint::scalar(0.0, 0.0);
        assert_eq!(ppm_step(&p, &origin, 3.0, 0.7, None).unwrap(), origin);
    }

    #[test]
    fn ppm2_examples() {
        let p = rq();
        let z = SplitPoint::scalar(1.0, 0.0);
        assert_eq!(ppm2_step(&p, &z, 3.0, 0.3, 0.3, None).unwrap(), ppm_step(&p, &z, 3.0, 0.3, None).unwrap());
        let frozen = ppm2_step(&p, &z, 3.0, 0.0, 1.0, None).unwrap();
        assert!(close_pt(&frozen, 1.0, 0.75, 1e-12));
        assert!(close_pt(&ppm2_step(&p, &z, 3.0, 0.5, 1.0, None).unwrap(), 0.875, 0.75, 1e-12));
    }

    #[test]
    fn gradient_scheme_examples() {
        let xy = CoupledSeparable::bilinear(1.0).unwrap();
        let next = gda_step(&xy, &SplitPoint::scalar(1.0, 0.0), 0.1).unwrap();
        assert!(close_pt(&next, 1.0, 0.1, 1e-15));
        assert!(next.norm() > 1.0);
        assert!(close_pt(&agda_step(&xy, &SplitPoint::scalar(1.0, 1.0), 0.5).unwrap(), 0.5, 1.25, 1e-15));
        assert!(close_pt(&egm_step(&xy, &SplitPoint::scalar(1.0, 0.0), 0.1).unwrap(), 0.99, 0.1, 1e-15));
        let origin = SplitPoint::scalar(0.0, 0.0);
        let fig = make_figure1_problem(10.0).unwrap();
        for step in [gda_step, agda_step, egm_step] {
            assert_eq!(step(&fig, &origin, 0.01).unwrap(), origin);
        }
    }

    #[test]
    fn figure1_gda_step_matches_hand_gradient() {
        let a = 10.0;
        let p = make_figure1_problem(a).unwrap();
        let s = 1.0 / (2.0 * (172.0 + a));
        let (x, y) = (1.0, 2.0);
        let fp = |t: f64| 4.0 * t * t * t - 20.0 * t;
        let next = gda_step(&p, &SplitPoint::scalar(x, y), s).unwrap();
        assert!(close_pt(&next, x - s * (fp(x) + a * y), y + s * (a * x - fp(y)), 1e-14));
    }

    #[test]
    fn agda_on_separable_matches_gda() {
        let q = Polynomial::new(vec![9.0, 0.0, -10.0, 0.0, 1.0]);
        let p = CoupledSeparable::new(q.clone(), q, DMatrix::zeros(1, 1),
            Some(BoxDomain::cube(2, -4.0, 4.0))).unwrap();
        let z = SplitPoint::scalar(0.7, -1.9);
        assert_eq!(agda_step(&p, &z, 0.01).unwrap(), gda_step(&p, &z, 0.01).unwrap());
    }

    #[test]
    fn egm_contracts_on_strongly_convex_concave_quadratic() {
        // L = x²/2 + xy − y²/2; EGM is linear with spectral radius < 1 for small s.
        let sq = Polynomial::new(vec![0.0, 0.0, 0.5]);
        let p = CoupledSeparable::new(sq.clone(), sq, DMatrix::from_element(1, 1, 1.0), None).unwrap();
        let z = SplitPoint::scalar(0.3, -1.2);
        assert!(egm_step(&p, &z, 0.1).unwrap().norm() < z.norm());
    }

    #[test]
    fn gda2_projection_and_equivalences() {
        let p = make_figure1_problem(10.0).unwrap();
        let z = SplitPoint::scalar(1.0, 2.0);
        let (unclamped, flag) = gda2_step(&p, &z, 50.0, 50.0, None).unwrap();
        assert!(!flag);
        assert_eq!(unclamped, gda_step(&p, &z, 1.0 / 50.0).unwrap());
        let tight = BoxDomain::new(vec![1.9], vec![2.05]).unwrap();
        let (clamped, flag) = gda2_step(&p, &z, 50.0, 50.0, Some(&tight)).unwrap();
        assert!(flag);
        assert!(clamped.y[0] == 1.9 || clamped.y[0] == 2.05);
        assert_eq!(clamped.x, unclamped.x);

        // GDA2 on the envelope is PPM2 with λ = η/η_x, γ = η/η_y.
        let (eta, ex, ey) = (40.0, 80.0, 50.0);
        let lhs = envelope_gda2_step(&p, &z, eta, ex, ey, Some(1e-12)).unwrap();
        let rhs = ppm2_step(&p, &z, eta, eta / ex, eta / ey, Some(1e-12)).unwrap();
        assert!(lhs.dist(&rhs) < 1e-12);
    }

    #[test]
    fn run_quadratic_converges_and_diverges() {
        let p = rq();
        let z0 = SplitPoint::scalar(1.0, 0.0);
        let t = run(&p, &AlgoConfig::ppm(3.0, 0.5).with_max_iter(2000), &z0).unwrap();
        assert_eq!(t.termination, Termination::Converged);
        for w in t.iterates.windows(2) {
            if w[0].norm() > 1e-6 {
                assert!((w[1].norm() / w[0].norm() - 0.90625f64.sqrt()).abs() < 1e-8);
            }
        }
        assert_eq!(t.diagnostics.len(), t.iterates.len());

        let t = run(&p, &AlgoConfig::ppm(3.0, 1.0).with_max_iter(2000), &z0).unwrap();
        assert_eq!(t.termination, Termination::Diverged);
        assert!((t.iterates[1].norm() - 1.125f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn run_budget_and_failures() {
        let p = make_figure1_problem(10.0).unwrap();
        let t = run(&p, &AlgoConfig::ppm(40.0, 1.0).with_max_iter(50), &SplitPoint::scalar(3.0, 3.0)).unwrap();
        assert_eq!(t.termination, Termination::Budget);
        assert_eq!(t.iterates.len(), 51);
        assert!(t.diagnostics[..50].iter().all(|d| d.env_grad_norm.is_some()));

        assert!(run(&p, &AlgoConfig::ppm(10.0, 1.0), &SplitPoint::scalar(3.0, 3.0)).is_err());
        assert!(run(&p, &AlgoConfig::ppm(40.0, 0.0), &SplitPoint::scalar(3.0, 3.0)).is_err());
        assert!(run(&p, &AlgoConfig::new(Scheme::Gda), &SplitPoint::scalar(3.0, 3.0)).is_err());

        let mut cfg = AlgoConfig::ppm(40.0, 1.0);
        cfg.inner_tol = Some(1e-300);
        let t = run(&p, &cfg, &SplitPoint::scalar(3.0, 3.0)).unwrap();
        assert!(matches!(t.termination, Termination::Failed(_)));
    }

    #[test]
    fn run_records_lyapunov() {
        let p = rq();
        let mut cfg = AlgoConfig::ppm(3.0, 0.5).with_max_iter(5);
        cfg.record_lyapunov = true;
        let t = run(&p, &cfg, &SplitPoint::scalar(1.0, 0.0)).unwrap();
        assert!((t.diagnostics[0].lyapunov.unwrap() - 1.25).abs() < 1e-9);
        assert!(t.diagnostics.iter().all(|d| d.lyapunov.is_some()));
    }
}
