//! Proximal operator of a minimax objective and the two partial Moreau
//! envelopes.
//!
//! Each subproblem is strongly monotone with modulus `η − ρ`. It is solved by
//! damped Newton on the first-order system, falling back to the plain
//! gradient iteration `w ← w − s·F(w)` with `s = μ/β̂²` (`μ = η − ρ`,
//! `β̂ = β + η`), which contracts by `√(1 − μ²/β̂²)` per step.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::numerics::solve_linear;
use crate::problems::{MinimaxProblem, SplitPoint};

pub const DEFAULT_INNER_BUDGET: usize = 10_000;
const MAX_HALVINGS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InnerMethod {
    /// Damped Newton, with the gradient iteration as fallback.
    #[default]
    Newton,
    /// The gradient iteration only.
    Gradient,
}

#[derive(Clone, Debug)]
pub struct InnerOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub method: InnerMethod,
    /// Initial guess; the center is used when absent.
    pub start: Option<SplitPoint>,
    /// Gradient-iteration stepsize override. Must lie in `(0, 2μ/β̂²)` for
    /// the contraction guarantee to apply.
    pub step: Option<f64>,
    /// Record every inner iterate.
    pub trace: bool,
}

impl InnerOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, max_iter: DEFAULT_INNER_BUDGET, method: InnerMethod::Newton, start: None, step: None, trace: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxResult {
    pub z_plus: SplitPoint,
    /// `‖∇M(z₊)‖` for the proximal subproblem `M`.
    pub residual: f64,
    pub inner_iters: usize,
    pub eta: f64,
    pub tol: f64,
    /// Whether the gradient iteration was needed.
    pub used_fallback: bool,
    /// Inner iterates including the start; empty unless tracing was requested.
    pub trace: Vec<SplitPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialEnvelopeResult {
    pub value: f64,
    /// The inner minimizer (x-envelope) or maximizer (y-envelope).
    #[serde(with = "crate::numerics::serde_vector")]
    pub arg: DVector<f64>,
    pub residual: f64,
}

/// `1e-10 · max(1, ‖∇L(z)‖)`.
pub fn default_tolerance(problem: &dyn MinimaxProblem, z: &SplitPoint) -> Result<f64> {
    Ok(1e-10 * problem.grad_norm(z)?.max(1.0))
}

/// Strong-monotonicity modulus `η − ρ` and operator Lipschitz bound `β + η`.
pub fn subproblem_constants(problem: &dyn MinimaxProblem, eta: f64) -> Result<(f64, f64)> {
    check_eta(problem, eta)?;
    Ok((eta - problem.rho(), problem.beta() + eta))
}

/// Stepsize `μ/β̂²` for the fallback iteration.
pub fn fallback_step(problem: &dyn MinimaxProblem, eta: f64) -> Result<f64> {
    let (mu, lip) = subproblem_constants(problem, eta)?;
    Ok(mu / (lip * lip))
}

pub(crate) fn check_eta(problem: &dyn MinimaxProblem, eta: f64) -> Result<()> {
    if !eta.is_finite() || eta <= problem.rho() {
        return Err(param(format!("eta must exceed rho = {}, got {eta}", problem.rho())));
    }
    Ok(())
}

struct Solve {
    w: DVector<f64>,
    residual: f64,
    iters: usize,
    used_fallback: bool,
    trace: Vec<DVector<f64>>,
}

/// Finds a zero of a strongly monotone operator `op` whose Jacobian is `jac`.
fn solve_monotone(
    op: &dyn Fn(&DVector<f64>) -> Result<DVector<f64>>,
    jac: &dyn Fn(&DVector<f64>) -> Result<DMatrix<f64>>,
    start: DVector<f64>,
    step: f64,
    opts: &InnerOptions,
    what: &'static str,
    to_point: &dyn Fn(&DVector<f64>) -> SplitPoint,
) -> Result<Solve> {
    if !(opts.tol > 0.0) {
        return Err(param(format!("inner tolerance must be positive, got {}", opts.tol)));
    }
    let mut w = start;
    let mut f = op(&w)?;
    let mut res = f.norm();
    let mut iters = 0;
    let mut trace = Vec::new();
    if opts.trace {
        trace.push(w.clone());
    }
    let mut newton = opts.method == InnerMethod::Newton;
    let mut used_fallback = !newton;

    while res > opts.tol {
        if iters >= opts.max_iter {
            return Err(Error::Convergence { what, iterations: iters, residual: res, best: Box::new(to_point(&w)) });
        }
        iters += 1;
        if newton {
            let accepted = match jac(&w).and_then(|j| solve_linear(&j, &f)) {
                Ok(d) => {
                    let mut t = 1.0;
                    let mut next = None;
                    for _ in 0..MAX_HALVINGS {
                        let cand = &w - &d * t;
                        if let Ok(fc) = op(&cand) {
                            let rc = fc.norm();
                            if rc.is_finite() && rc <= (1.0 - 1e-4 * t) * res {
                                next = Some((cand, fc, rc));
                                break;
                            }
                        }
                        t *= 0.5;
                    }
                    next
                }
                Err(_) => None,
            };
            match accepted {
                Some((cand, fc, rc)) => {
                    w = cand;
                    f = fc;
                    res = rc;
                }
                None => {
                    newton = false;
                    used_fallback = true;
                    iters -= 1;
                    continue;
                }
            }
        } else {
            w -= &f * step;
            f = op(&w)?;
            res = f.norm();
        }
        if opts.trace {
            trace.push(w.clone());
        }
    }
    Ok(Solve { w, residual: res, iters, used_fallback, trace })
}

/// Computes `z₊ = argmin_u max_v L(u, v) + (η/2)‖u − x‖² − (η/2)‖v − y‖²`.
pub fn inner_solve(problem: &dyn MinimaxProblem, center: &SplitPoint, eta: f64, tol: f64) -> Result<ProxResult> {
    inner_solve_with(problem, center, eta, &InnerOptions::with_tol(tol))
}

pub fn inner_solve_with(
    problem: &dyn MinimaxProblem,
    center: &SplitPoint,
    eta: f64,
    opts: &InnerOptions,
) -> Result<ProxResult> {
    let (n, m) = problem.dims();
    center.check(n, m)?;
    let step = match opts.step {
        Some(s) => s,
        None => fallback_step(problem, eta)?,
    };
    check_eta(problem, eta)?;
    let start = match &opts.start {
        Some(s) => {
            s.check(n, m)?;
            s.stacked()
        }
        None => center.stacked(),
    };
    // F(w) = (∇ₓM, −∇ᵧM), strongly monotone; its Jacobian is ηI + [Lxx, Lxy; −Lyx, −Lyy].
    let op = |w: &DVector<f64>| -> Result<DVector<f64>> {
        let z = SplitPoint::from_stacked(w, n);
        let g = problem.grad(&z)?;
        let mut f = DVector::zeros(n + m);
        f.rows_mut(0, n).copy_from(&(g.x + (&z.x - &center.x) * eta));
        f.rows_mut(n, m).copy_from(&(-(g.y) + (&z.y - &center.y) * eta));
        Ok(f)
    };
    let jac = |w: &DVector<f64>| -> Result<DMatrix<f64>> {
        let z = SplitPoint::from_stacked(w, n);
        let mut j = problem.hessian(&z)?;
        j.rows_mut(n, m).neg_mut();
        j += DMatrix::identity(n + m, n + m) * eta;
        Ok(j)
    };
    let to_point = |w: &DVector<f64>| SplitPoint::from_stacked(w, n);
    let s = solve_monotone(&op, &jac, start, step, opts, "proximal subproblem", &to_point)?;
    Ok(ProxResult {
        z_plus: SplitPoint::from_stacked(&s.w, n),
        residual: s.residual,
        inner_iters: s.iters,
        eta,
        tol: opts.tol,
        used_fallback: s.used_fallback,
        trace: s.trace.iter().map(|w| SplitPoint::from_stacked(w, n)).collect(),
    })
}

/// `prox_η(z)`; the tolerance defaults to [`default_tolerance`].
pub fn prox(problem: &dyn MinimaxProblem, z: &SplitPoint, eta: f64, tol: Option<f64>) -> Result<ProxResult> {
    let tol = match tol {
        Some(t) => t,
        None => default_tolerance(problem, z)?,
    };
    inner_solve(problem, z, eta, tol)
}

/// `e_η{L(·, y)}(x) = min_u L(u, y) + (η/2)‖u − x‖²`.
pub fn partial_moreau_x(
    problem: &dyn MinimaxProblem,
    z: &SplitPoint,
    eta: f64,
    tol: Option<f64>,
) -> Result<PartialEnvelopeResult> {
    let (n, m) = problem.dims();
    z.check(n, m)?;
    let tol = match tol {
        Some(t) => t,
        None => default_tolerance(problem, z)?,
    };
    let step = fallback_step(problem, eta)?;
    let at = |u: &DVector<f64>| SplitPoint::new(u.clone(), z.y.clone());
    let op = |u: &DVector<f64>| -> Result<DVector<f64>> { Ok(problem.grad_x(&at(u))? + (u - &z.x) * eta) };
    let jac = |u: &DVector<f64>| -> Result<DMatrix<f64>> {
        Ok(problem.hess_xx(&at(u))? + DMatrix::identity(n, n) * eta)
    };
    let s = solve_monotone(&op, &jac, z.x.clone(), step, &InnerOptions::with_tol(tol), "x-smoothing subproblem", &at)?;
    let value = problem.value(&at(&s.w))? + 0.5 * eta * (&s.w - &z.x).norm_squared();
    Ok(PartialEnvelopeResult { value, arg: s.w, residual: s.residual })
}

/// `−e_η{−L(x, ·)}(y) = max_v L(x, v) − (η/2)‖v − y‖²`.
pub fn partial_moreau_y(
    problem: &dyn MinimaxProblem,
    z: &SplitPoint,
    eta: f64,
    tol: Option<f64>,
) -> Result<PartialEnvelopeResult> {
    let (n, m) = problem.dims();
    z.check(n, m)?;
    let tol = match tol {
        Some(t) => t,
        None => default_tolerance(problem, z)?,
    };
    let step = fallback_step(problem, eta)?;
    let at = |v: &DVector<f64>| SplitPoint::new(z.x.clone(), v.clone());
    let op = |v: &DVector<f64>| -> Result<DVector<f64>> { Ok(-problem.grad_y(&at(v))? + (v - &z.y) * eta) };
    let jac = |v: &DVector<f64>| -> Result<DMatrix<f64>> {
        Ok(-problem.hess_yy(&at(v))? + DMatrix::identity(m, m) * eta)
    };
    let s = solve_monotone(&op, &jac, z.y.clone(), step, &InnerOptions::with_tol(tol), "y-smoothing subproblem", &at)?;
    let value = problem.value(&at(&s.w))? - 0.5 * eta * (&s.w - &z.y).norm_squared();
    Ok(PartialEnvelopeResult { value, arg: s.w, residual: s.residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{finite_diff_problem, make_figure1_problem, Constants, CoupledSeparable, Polynomial,
        RotationalQuadratic, StepPolicy};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn rq() -> RotationalQuadratic {
        RotationalQuadratic::new(1.0, 2.0, 1).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Closed-form prox of the rotational quadratic: invert
    /// `[(η−ρ), a; −a, (η−ρ)]·z₊ = η·z` by hand.
    fn rq_prox_oracle(rho: f64, a: f64, eta: f64, x: f64, y: f64) -> (f64, f64) {
        let d = eta - rho;
        let det = d * d + a * a;
        (eta * (d * x - a * y) / det, eta * (a * x + d * y) / det)
    }

    #[test]
    fn rotational_quadratic_closed_form() {
        let p = rq();
        let r = prox(&p, &SplitPoint::scalar(1.0, 0.0), 3.0, None).unwrap();
        assert!(close(r.z_plus.x[0], 0.75, 1e-12) && close(r.z_plus.y[0], 0.75, 1e-12));
        assert_eq!(rq_prox_oracle(1.0, 2.0, 3.0, 1.0, 0.0), (0.75, 0.75));
        let r = prox(&p, &SplitPoint::scalar(0.0, 1.0), 3.0, None).unwrap();
        assert!(close(r.z_plus.x[0], -0.75, 1e-12) && close(r.z_plus.y[0], 0.75, 1e-12));
        assert!(r.residual <= r.tol);
        assert_eq!(r.eta, 3.0);
    }

    #[test]
    fn stationary_center_is_fixed() {
        let p = make_figure1_problem(10.0).unwrap();
        let r = prox(&p, &SplitPoint::scalar(0.0, 0.0), 40.0, None).unwrap();
        assert_eq!(r.z_plus, SplitPoint::scalar(0.0, 0.0));
        assert_eq!(r.inner_iters, 0);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn y_independent_objective_reduces_to_moreau_prox() {
        // L = f(x) with f the quartic; prox_y is the identity.
        let quartic = Polynomial::new(vec![9.0, 0.0, -10.0, 0.0, 1.0]);
        let p = CoupledSeparable::new(quartic.clone(), Polynomial::zero(), nalgebra::DMatrix::zeros(1, 1),
            Some(crate::problems::BoxDomain::cube(2, -4.0, 4.0))).unwrap();
        let z = SplitPoint::scalar(1.3, -0.7);
        let eta = 40.0;
        let r = prox(&p, &z, eta, Some(1e-12)).unwrap();
        assert_eq!(r.z_plus.y[0], -0.7);
        let u = r.z_plus.x[0];
        assert!(close(quartic.derivative().eval(u) + eta * (u - 1.3), 0.0, 1e-10));
        // Moreau gradient identity.
        assert!(close(eta * (1.3 - u), quartic.derivative().eval(u), 1e-9));
    }

    #[test]
    fn eta_must_exceed_rho() {
        let p = rq();
        assert!(matches!(prox(&p, &SplitPoint::scalar(1.0, 0.0), 1.0, None), Err(Error::Parameter(_))));
        assert!(matches!(partial_moreau_x(&p, &SplitPoint::scalar(1.0, 0.0), 0.5, None), Err(Error::Parameter(_))));
    }

    #[test]
    fn budget_exhaustion_carries_best_iterate() {
        let p = make_figure1_problem(10.0).unwrap();
        let opts = InnerOptions { max_iter: 3, method: InnerMethod::Gradient, ..InnerOptions::with_tol(1e-12) };
        match inner_solve_with(&p, &SplitPoint::scalar(3.0, 3.0), 40.0, &opts) {
            Err(Error::Convergence { iterations, best, .. }) => {
                assert_eq!(iterations, 3);
                assert!(best.is_finite());
            }
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }

    #[test]
    fn partial_envelopes_closed_form() {
        let p = rq();
        let z = SplitPoint::scalar(1.0, 1.0);
        let ex = partial_moreau_x(&p, &z, 3.0, None).unwrap();
        assert!(close(ex.value, 1.75, 1e-10));
        // argmin of −u²/2 + 2u + (3/2)(u − 1)²: −u + 2 + 3u − 3 = 0.
        assert!(close(ex.arg[0], 0.5, 1e-10));
        let ey = partial_moreau_y(&p, &z, 3.0, None).unwrap();
        assert!(close(ey.value, 4.25, 1e-10));
        assert!(close(ey.arg[0], 2.5, 1e-10));
    }

    #[test]
    fn partial_envelopes_at_convex_minimizer_and_y_constant() {
        // f(x) = (x − 1)², convex; L independent of y.
        let f = Polynomial::new(vec![1.0, -2.0, 1.0]);
        let p = CoupledSeparable::new(f, Polynomial::zero(), nalgebra::DMatrix::zeros(1, 1), None).unwrap();
        let z = SplitPoint::scalar(1.0, 0.4);
        let ex = partial_moreau_x(&p, &z, 1.0, None).unwrap();
        assert!(close(ex.value, 0.0, 1e-14) && close(ex.arg[0], 1.0, 1e-14));
        let z = SplitPoint::scalar(3.0, 0.4);
        let ey = partial_moreau_y(&p, &z, 1.0, None).unwrap();
        assert!(close(ey.value, p.value(&z).unwrap(), 1e-14) && close(ey.arg[0], 0.4, 1e-14));
    }

    #[test]
    fn partial_envelopes_bracket_the_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = make_figure1_problem(10.0).unwrap();
        for _ in 0..100 {
            let z = SplitPoint::scalar(rng.gen_range(-3.5..3.5), rng.gen_range(-3.5..3.5));
            let l = p.value(&z).unwrap();
            let tol = 1e-9 * l.abs().max(1.0);
            assert!(partial_moreau_x(&p, &z, 40.0, None).unwrap().value <= l + tol);
            assert!(partial_moreau_y(&p, &z, 40.0, None).unwrap().value >= l - tol);
        }
    }

    #[test]
    fn gradient_fallback_contraction_certificate() {
        let p = make_figure1_problem(10.0).unwrap();
        let eta = 40.0;
        let (mu, lip) = subproblem_constants(&p, eta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let z = SplitPoint::scalar(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let exact = prox(&p, &z, eta, Some(1e-13)).unwrap().z_plus;
            for s in [mu / (lip * lip), 1.5 * mu / (lip * lip)] {
                let opts = InnerOptions {
                    method: InnerMethod::Gradient,
                    step: Some(s),
                    trace: true,
                    ..InnerOptions::with_tol(1e-11)
                };
                let trace = inner_solve_with(&p, &z, eta, &opts).unwrap().trace;
                let bound = (1.0 - 2.0 * mu * s + lip * lip * s * s).sqrt() + 1e-6;
                let errs: Vec<f64> = trace.iter().map(|w| w.dist(&exact)).collect();
                for k in 1..errs.len() {
                    if errs[k - 1] > 1e-9 {
                        assert!(errs[k] / errs[k - 1] <= bound, "ratio {} > {bound}", errs[k] / errs[k - 1]);
                    }
                }
            }
        }
    }

    #[test]
    fn newton_and_gradient_agree_with_finite_difference_problem() {
        let q = rq();
        let q2 = q.clone();
        let p = finite_diff_problem(Arc::new(move |z: &SplitPoint| q2.value(z).unwrap()), 1, 1,
            StepPolicy::default(), Constants { ..q.constants().clone() }).unwrap();
        let r = prox(&p, &SplitPoint::scalar(1.0, 0.0), 3.0, Some(1e-8)).unwrap();
        assert!(close(r.z_plus.x[0], 0.75, 1e-6) && close(r.z_plus.y[0], 0.75, 1e-6));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn uniqueness_across_starts(x in -3.5f64..3.5, y in -3.5f64..3.5, sx in -4.0f64..4.0, sy in -4.0f64..4.0,
                                    a in prop::sample::select(vec![1.0, 10.0, 100.0])) {
            let p = make_figure1_problem(a).unwrap();
            let z = SplitPoint::scalar(x, y);
            let tol = default_tolerance(&p, &z).unwrap();
            let eta = 40.0;
            let r1 = inner_solve(&p, &z, eta, tol).unwrap();
            let opts = InnerOptions { start: Some(SplitPoint::scalar(sx, sy)), ..InnerOptions::with_tol(tol) };
            let r2 = inner_solve_with(&p, &z, eta, &opts).unwrap();
            prop_assert!(r1.z_plus.dist(&r2.z_plus) <= 10.0 * tol / (eta - p.rho()));
        }

        #[test]
        fn fixed_point_distance_bound(x in -3.5f64..3.5, y in -3.5f64..3.5,
                                      a in prop::sample::select(vec![1.0, 10.0, 100.0])) {
            let p = make_figure1_problem(a).unwrap();
            let z = SplitPoint::scalar(x, y);
            let r = prox(&p, &z, 40.0, None).unwrap();
            let bound = p.grad_norm(&z).unwrap() / (40.0 - p.rho());
            prop_assert!(z.dist(&r.z_plus) <= bound * (1.0 + 1e-9) + 1e-12);
        }

        #[test]
        fn moreau_gradient_identity(x in -4.0f64..4.0) {
            let quartic = Polynomial::new(vec![9.0, 0.0, -10.0, 0.0, 1.0]);
            let p = CoupledSeparable::new(quartic.clone(), Polynomial::zero(), nalgebra::DMatrix::zeros(1, 1),
                Some(crate::problems::BoxDomain::cube(2, -4.0, 4.0))).unwrap();
            let tol = 1e-10;
            let r = partial_moreau_x(&p, &SplitPoint::scalar(x, 0.0), 40.0, Some(tol)).unwrap();
            let u = r.arg[0];
            prop_assert!((40.0 * (x - u) - quartic.derivative().eval(u)).abs() <= 10.0 * tol);
        }
    }
}
