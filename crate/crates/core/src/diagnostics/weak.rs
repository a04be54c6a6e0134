use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{sym_eig_min, SymMatrix};
use crate::problems::{MinimaxProblem, SplitPoint};
use crate::prox::check_eta;

/// Evaluation budget (values plus gradients) for each block subproblem of
/// [`init_weak`].
pub const INIT_WEAK_BUDGET: usize = 50_000;

/// Backtracking gradient descent on `f` from `start` until `‖∇f‖ ≤ tol`.
///
/// A trial step is accepted on sufficient decrease, or, once value
/// differences fall below rounding, whenever the gradient norm shrinks.
fn descend(
    f: &dyn Fn(&DVector<f64>) -> Result<f64>,
    grad: &dyn Fn(&DVector<f64>) -> Result<DVector<f64>>,
    start: DVector<f64>,
    tol: f64,
    what: &'static str,
    to_point: &dyn Fn(&DVector<f64>) -> SplitPoint,
) -> Result<DVector<f64>> {
    let mut evals = 2;
    let mut u = start;
    let mut fu = f(&u)?;
    let mut g = grad(&u)?;
    let mut t = 1.0;
    let fail = |u: &DVector<f64>, g: &DVector<f64>, evals: usize| Error::Convergence {
        what,
        iterations: evals,
        residual: g.norm(),
        best: Box::new(to_point(u)),
    };
    while g.norm() > tol {
        t *= 2.0;
        let gg = g.norm_squared();
        loop {
            if evals + 2 > INIT_WEAK_BUDGET || t < 1e-30 {
                return Err(fail(&u, &g, evals));
            }
            let cand = &u - &g * t;
            let fc = f(&cand)?;
            evals += 1;
            if fc.is_finite() && fc <= fu - 0.5 * t * gg {
                let gc = grad(&cand)?;
                evals += 1;
                u = cand;
                fu = fc;
                g = gc;
                break;
            }
            if fc.is_finite() && fc <= fu + 4.0 * f64::EPSILON * fu.abs() {
                let gc = grad(&cand)?;
                evals += 1;
                if gc.norm() < g.norm() {
                    u = cand;
                    fu = fc;
                    g = gc;
                    break;
                }
            }
            t *= 0.5;
        }
    }
    Ok(u)
}

/// Blockwise initialization: `x₀` a local minimizer of `L(·, y')` reached by
/// descent from `x'`, and `y₀` a local maximizer of `L(x', ·)` reached by
/// ascent from `y'`, each to block-gradient norm `tol`.
pub fn init_weak(problem: &dyn MinimaxProblem, z_prime: &SplitPoint, eta: f64, tol: f64) -> Result<SplitPoint> {
    let (n, m) = problem.dims();
    z_prime.check(n, m)?;
    check_eta(problem, eta)?;
    let at_x = |u: &DVector<f64>| SplitPoint::new(u.clone(), z_prime.y.clone());
    let at_y = |v: &DVector<f64>| SplitPoint::new(z_prime.x.clone(), v.clone());
    let x0 = descend(
        &|u| problem.value(&at_x(u)),
        &|u| problem.grad_x(&at_x(u)),
        z_prime.x.clone(),
        tol,
        "blockwise minimization",
        &at_x,
    )?;
    let y0 = descend(
        &|v| Ok(-problem.value(&at_y(v))?),
        &|v| Ok(-problem.grad_y(&at_y(v))?),
        z_prime.y.clone(),
        tol,
        "blockwise maximization",
        &at_y,
    )?;
    Ok(SplitPoint::new(x0, y0))
}

/// `max(0, min(λ_min ∇²ₓₓL(x₀, y'), λ_min −∇²ᵧᵧL(x', y₀)))`: the curvature
/// at the blockwise optima.
pub fn local_curvature(problem: &dyn MinimaxProblem, z_prime: &SplitPoint, z0: &SplitPoint) -> Result<f64> {
    let hx = problem.hess_xx(&SplitPoint::new(z0.x.clone(), z_prime.y.clone()))?;
    let hy = -problem.hess_yy(&SplitPoint::new(z_prime.x.clone(), z0.y.clone()))?;
    let mu = sym_eig_min(&SymMatrix::symmetrized(&hx)?)?.min(sym_eig_min(&SymMatrix::symmetrized(&hy)?)?);
    Ok(mu.max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakRegimeReport {
    pub z0: SplitPoint,
    pub eta: f64,
    pub rho: f64,
    pub mu: f64,
    /// Lower bound on dominance at `z₀`, the smaller of the two blocks.
    pub alpha0: f64,
    pub grad_norm_z0: f64,
    /// Inner radius; `None` when `α₀ ≤ 0`.
    pub r: Option<f64>,
    /// Outer radius; `None` when `α₀ ≤ 0`.
    #[serde(rename = "R")]
    pub big_r: Option<f64>,
    /// Both dominance lower bounds are strictly positive.
    pub psd_ok: bool,
    /// The initial gradient is small enough for dominance to persist on the outer ball.
    pub local_ok: bool,
    /// `δ‖z₀ − z'‖`.
    pub local_lhs: f64,
    pub local_rhs: f64,
    /// Largest damping covered by the local rate.
    pub lambda_max: Option<f64>,
}

impl WeakRegimeReport {
    /// `1 − 2λ/(2η/α₀ + 1) + λ²/min{1, (η/ρ − 1)²}`.
    pub fn rate(&self, lambda: f64) -> Option<f64> {
        if !(self.alpha0 > 0.0) {
            return None;
        }
        let sat = if self.rho <= 0.0 { 1.0 } else { (self.eta / self.rho - 1.0).powi(2).min(1.0) };
        Some(1.0 - 2.0 * lambda / (2.0 * self.eta / self.alpha0 + 1.0) + lambda * lambda / sat)
    }
}

/// Evaluates the weak-interaction conditions at the initialization `z0`
/// built from `z_prime`. `mu_local` defaults to [`local_curvature`].
pub fn weak_regime_check(
    problem: &dyn MinimaxProblem,
    z_prime: &SplitPoint,
    z0: &SplitPoint,
    eta: f64,
    mu_local: Option<f64>,
) -> Result<WeakRegimeReport> {
    check_eta(problem, eta)?;
    let (n, m) = problem.dims();
    z_prime.check(n, m)?;
    z0.check(n, m)?;
    let c = problem.constants();
    let h = c.lipschitz_hessian.ok_or(Error::MissingConstant("H"))?;
    let delta = c.interaction_bound.ok_or(Error::MissingConstant("delta"))?;
    let xi = c.interaction_lipschitz.ok_or(Error::MissingConstant("xi"))?;
    let (rho, beta) = (problem.rho(), problem.beta());
    let mu = match mu_local {
        Some(mu) => mu,
        None => local_curvature(problem, z_prime, z0)?,
    };

    let b = problem.hess_xy(z0)?;
    let bbt = sym_eig_min(&SymMatrix::symmetrized(&(&b * b.transpose()))?)?;
    let btb = sym_eig_min(&SymMatrix::symmetrized(&(b.transpose() * &b))?)?;
    let ax = mu + bbt / (eta + beta) - xi * (&z0.y - &z_prime.y).norm();
    let ay = mu + btb / (eta + beta) - xi * (&z0.x - &z_prime.x).norm();
    let alpha0 = ax.min(ay);
    let psd_ok = ax > 0.0 && ay > 0.0;

    let g0 = problem.grad_norm(z0)?;
    let gap = eta - rho;
    let local_lhs = delta * z0.dist(z_prime);
    let mut report = WeakRegimeReport {
        z0: z0.clone(),
        eta,
        rho,
        mu,
        alpha0,
        grad_norm_z0: g0,
        r: None,
        big_r: None,
        psd_ok,
        local_ok: false,
        local_lhs,
        local_rhs: f64::NAN,
        lambda_max: None,
    };
    if !psd_ok {
        return Ok(report);
    }
    let widen = (eta + alpha0 / 2.0) / alpha0;
    let sqrt2 = std::f64::consts::SQRT_2;
    let outer = 1.0 + 4.0 * sqrt2 * widen + 4.0 * sqrt2 * beta * widen / gap;
    report.r = Some(4.0 * widen * g0 / gap);
    report.big_r = Some(outer * g0 / gap);
    let lip = h * (1.0 + 2.0 * delta / gap + delta * delta / (gap * gap));
    report.local_rhs = if lip == 0.0 { f64::INFINITY } else { alpha0 * gap / (2.0 * outer * lip) };
    report.local_ok = local_lhs <= report.local_rhs;
    let sat = if rho <= 0.0 { 1.0 } else { (eta / rho - 1.0).powi(2).min(1.0) };
    report.lambda_max = Some(2.0 * sat / (2.0 * eta / alpha0 + 1.0));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_figure1_problem, CoupledSeparable, Polynomial};
    use nalgebra::DMatrix;

    #[test]
    fn separable_initialization_finds_quartic_wells() {
        let p = make_figure1_problem(0.0).unwrap();
        let z0 = init_weak(&p, &SplitPoint::scalar(1.5, 1.5), 40.0, 1e-10).unwrap();
        // f'(t) = 4t³ − 20t: positive root √5; the y block maximizes −g.
        let r = 5f64.sqrt();
        assert!((z0.x[0] - r).abs() < 1e-10, "{z0:?}");
        assert!((z0.y[0].abs() - 0.0).abs() < 1e-10 || (z0.y[0].abs() - r).abs() < 1e-10, "{z0:?}");
    }

    #[test]
    fn blockwise_optimum_is_fixed() {
        let p = make_figure1_problem(0.0).unwrap();
        let zp = SplitPoint::scalar(5f64.sqrt(), 0.0);
        assert_eq!(init_weak(&p, &zp, 40.0, 1e-10).unwrap(), zp);
    }

    #[test]
    fn coupled_initialization_satisfies_block_conditions() {
        let p = make_figure1_problem(1.0).unwrap();
        let zp = SplitPoint::scalar(1.5, 1.5);
        let z0 = init_weak(&p, &zp, 40.0, 1e-10).unwrap();
        assert!(p.grad_x(&SplitPoint::new(z0.x.clone(), zp.y.clone())).unwrap().norm() <= 1e-10);
        assert!(p.grad_y(&SplitPoint::new(zp.x.clone(), z0.y.clone())).unwrap().norm() <= 1e-10);
        // Descent from 1.5 moves right toward the well near √5, shifted by the coupling.
        assert!(z0.x[0] > 1.9 && z0.x[0] < 2.3);
        assert!(local_curvature(&p, &zp, &z0).unwrap() > 30.0);
    }

    #[test]
    fn bilinear_psd_condition_and_radii() {
        // Pure bilinear with μ = 0: the condition is λ_min(AAᵀ)/(η + β) > 0.
        let p = CoupledSeparable::bilinear(2.0).unwrap();
        let z = SplitPoint::scalar(0.0, 0.0);
        let r = weak_regime_check(&p, &z, &z, 1.0, Some(0.0)).unwrap();
        assert!(r.psd_ok);
        assert!((r.alpha0 - 4.0 / (1.0 + 2.0)).abs() < 1e-12);
        assert_eq!((r.r, r.big_r), (Some(0.0), Some(0.0)));
        assert!(r.local_ok);

        let zero = CoupledSeparable::new(Polynomial::zero(), Polynomial::zero(), DMatrix::zeros(1, 1), None).unwrap();
        let r = weak_regime_check(&zero, &z, &z, 1.0, Some(0.0)).unwrap();
        assert!(!r.psd_ok && r.r.is_none() && r.lambda_max.is_none());
    }

    #[test]
    fn outer_radius_dominates_inner() {
        let p = make_figure1_problem(1.0).unwrap();
        let zp = SplitPoint::scalar(1.5, 1.5);
        let z0 = init_weak(&p, &zp, 40.0, 1e-10).unwrap();
        let r = weak_regime_check(&p, &zp, &z0, 40.0, None).unwrap();
        assert!(r.psd_ok && r.grad_norm_z0 > 0.0);
        assert!(r.big_r.unwrap() >= std::f64::consts::SQRT_2 * r.r.unwrap());
        let lm = r.lambda_max.unwrap();
        assert!((r.rate(lm).unwrap() - 1.0).abs() < 1e-12);
        assert!(r.rate(lm / 2.0).unwrap() < 1.0);
    }

    #[test]
    fn missing_constants_are_reported() {
        use crate::problems::{finite_diff_problem, Constants, StepPolicy};
        let p = finite_diff_problem(std::sync::Arc::new(|z: &SplitPoint| z.x[0] * z.y[0]), 1, 1, StepPolicy::default(),
            Constants { rho: 0.0, beta: 1.0, lipschitz_hessian: None, interaction_bound: None,
                interaction_lipschitz: None, domain: None }).unwrap();
        let z = SplitPoint::scalar(0.0, 0.0);
        assert!(matches!(weak_regime_check(&p, &z, &z, 1.0, None), Err(Error::MissingConstant("H"))));
    }
}
