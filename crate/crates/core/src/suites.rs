//! Named invariant suites. Each check aggregates a worst case over sampled
//! points and reports it against its threshold.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algorithms::ppm_step;
use crate::diagnostics::{
    lambda_bound_two_sided, lyapunov, lyapunov_recurrence_slack, quadratic_oracle, rate_two_sided,
};
use crate::envelope::{curvature_bounds, dominance, dominance_over_box, EnvelopeEval};
use crate::error::{param, Result};
use crate::numerics::{central_gradient, central_jacobian, spectral_norm, sym_eig_min, SymMatrix};
use crate::problems::{
    make_figure1_problem, BoxDomain, CoupledSeparable, MinimaxProblem, Polynomial, RotationalQuadratic, SplitPoint,
};
use crate::prox::{default_tolerance, inner_solve, inner_solve_with, partial_moreau_x, prox, InnerOptions};

pub const SUITES: &[&str] = &["problems", "prox", "envelope-calculus", "quadratic-oracle", "lyapunov"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub suite: String,
    pub name: String,
    pub measured: f64,
    pub bound: Bound,
    pub threshold: f64,
    /// Distance from the threshold on the passing side; negative on failure.
    pub slack: f64,
    pub passed: bool,
    pub samples: usize,
}

struct Recorder {
    suite: &'static str,
    out: Vec<CheckOutcome>,
}

impl Recorder {
    fn at_most(&mut self, name: String, measured: f64, threshold: f64, samples: usize) {
        let slack = threshold - measured;
        self.push(name, measured, Bound::AtMost, threshold, slack, samples);
    }

    fn at_least(&mut self, name: String, measured: f64, threshold: f64, samples: usize) {
        let slack = measured - threshold;
        self.push(name, measured, Bound::AtLeast, threshold, slack, samples);
    }

    fn push(&mut self, name: String, measured: f64, bound: Bound, threshold: f64, slack: f64, samples: usize) {
        self.out.push(CheckOutcome {
            suite: self.suite.to_string(),
            name,
            measured,
            bound,
            threshold,
            slack,
            passed: slack >= 0.0,
            samples,
        });
    }
}

/// Runs the named suite with sampling seeded by `seed`.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let suite = SUITES
        .iter()
        .copied()
        .find(|s| *s == name)
        .ok_or_else(|| param(format!("unknown suite `{name}`; available: {}", SUITES.join(", "))))?;
    let mut rec = Recorder { suite, out: Vec::new() };
    match suite {
        "problems" => problems_suite(&mut rec, &mut rng)?,
        "prox" => prox_suite(&mut rec, &mut rng)?,
        "envelope-calculus" => envelope_suite(&mut rec, &mut rng)?,
        "quadratic-oracle" => quadratic_suite(&mut rec, &mut rng)?,
        "lyapunov" => lyapunov_suite(&mut rec, &mut rng)?,
        _ => unreachable!(),
    }
    Ok(rec.out)
}

type Named = (String, Box<dyn MinimaxProblem>);

fn sample_problems() -> Result<Vec<Named>> {
    let mut v: Vec<Named> = Vec::new();
    for a in [1.0, 10.0, 100.0] {
        v.push((format!("figure1 a={a}"), Box::new(make_figure1_problem(a)?)));
    }
    v.push(("rotational rho=1 a=2".into(), Box::new(RotationalQuadratic::new(1.0, 2.0, 1)?)));
    v.push(("rotational rho=0.5 a=1.5 n=3".into(), Box::new(RotationalQuadratic::new(0.5, 1.5, 3)?)));
    v.push(("bilinear a=2".into(), Box::new(CoupledSeparable::bilinear(2.0)?)));
    Ok(v)
}

fn random_point(rng: &mut ChaCha8Rng, n: usize, m: usize, half_width: f64) -> SplitPoint {
    let v = DVector::from_fn(n + m, |_, _| rng.gen_range(-half_width..half_width));
    SplitPoint::from_stacked(&v, n)
}

fn eta_for(p: &dyn MinimaxProblem) -> f64 {
    if p.rho() > 0.0 {
        2.0 * p.rho()
    } else {
        1.0
    }
}

fn problems_suite(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    const POINTS: usize = 100;
    for (label, p) in sample_problems()? {
        let (n, m) = p.dims();
        let (mut grad_err, mut hess_err, mut asym, mut curv, mut norm_excess) = (0.0f64, 0.0f64, 0.0f64, f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..POINTS {
            let z = random_point(rng, n, m, 3.5);
            let v = z.stacked();
            let value = |w: &DVector<f64>| p.value(&SplitPoint::from_stacked(w, n));
            let grad = |w: &DVector<f64>| Ok(p.grad(&SplitPoint::from_stacked(w, n))?.stacked());
            let g = grad(&v)?;
            let fd = central_gradient(&value, &v, 1.0 / 3.0)?;
            grad_err = grad_err.max((fd - &g).norm() / g.norm().max(1.0));
            let h = p.hessian(&z)?;
            let fdh = central_jacobian(&grad, &v, 0.25)?;
            hess_err = hess_err.max((fdh - &h).amax() / h.amax().max(1.0));
            asym = asym.max((&h - h.transpose()).amax());
            let hxx = SymMatrix::symmetrized(&p.hess_xx(&z)?)?;
            let hyy = SymMatrix::symmetrized(&(-p.hess_yy(&z)?))?;
            curv = curv.min(sym_eig_min(&hxx)?.min(sym_eig_min(&hyy)?) + p.rho());
            norm_excess = norm_excess.max(spectral_norm(&h)? - p.beta());
        }
        rec.at_most(format!("gradient vs central differences, relative [{label}]"), grad_err, 1e-6, POINTS);
        rec.at_most(format!("Hessian vs differences of gradient, relative [{label}]"), hess_err, 1e-4, POINTS);
        rec.at_most(format!("Hessian asymmetry [{label}]"), asym, 1e-12, POINTS);
        rec.at_least(format!("diagonal-block curvature plus rho [{label}]"), curv, -1e-9, POINTS);
        rec.at_most(format!("Hessian norm minus beta [{label}]"), norm_excess, 1e-9, POINTS);
    }
    // Separated stationary points of the a = 0 quartic.
    let p = make_figure1_problem(0.0)?;
    let r = 5f64.sqrt();
    let mut worst = 0.0f64;
    for x in [-r, 0.0, r] {
        for y in [-r, 0.0, r] {
            worst = worst.max(p.grad_norm(&SplitPoint::scalar(x, y))?);
        }
    }
    rec.at_most("separated critical points are stationary [figure1 a=0]".into(), worst, 1e-12, 9);
    Ok(())
}

fn prox_suite(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    const POINTS: usize = 100;
    for (label, p) in sample_problems()? {
        let (n, m) = p.dims();
        let eta = eta_for(p.as_ref());
        let mu = eta - p.rho();
        let (mut uniq, mut fixed, mut resid) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for _ in 0..POINTS {
            let z = random_point(rng, n, m, 3.5);
            let tol = default_tolerance(p.as_ref(), &z)?;
            let a = inner_solve(p.as_ref(), &z, eta, tol)?;
            let opts = InnerOptions { start: Some(random_point(rng, n, m, 4.0)), ..InnerOptions::with_tol(tol) };
            let b = inner_solve_with(p.as_ref(), &z, eta, &opts)?;
            uniq = uniq.max(a.z_plus.dist(&b.z_plus) - 10.0 * tol / mu);
            fixed = fixed.max(z.dist(&a.z_plus) - p.grad_norm(&z)? / mu * (1.0 + 1e-9));
            resid = resid.max(a.residual - tol);
        }
        rec.at_most(format!("distinct starts agree beyond 10 tol/(eta - rho) [{label}]"), uniq, 0.0, POINTS);
        rec.at_most(format!("|z - prox(z)| beyond |grad L(z)|/(eta - rho) [{label}]"), fixed, 1e-12, POINTS);
        rec.at_most(format!("residual beyond tolerance [{label}]"), resid, 0.0, POINTS);
    }
    let quartic = Polynomial::new(vec![9.0, 0.0, -10.0, 0.0, 1.0]);
    let p = CoupledSeparable::new(quartic.clone(), Polynomial::zero(), nalgebra::DMatrix::zeros(1, 1),
        Some(BoxDomain::cube(2, -4.0, 4.0)))?;
    let tol = 1e-10;
    let mut worst = 0.0f64;
    for _ in 0..POINTS {
        let x = rng.gen_range(-4.0..4.0);
        let r = partial_moreau_x(&p, &SplitPoint::scalar(x, 0.0), 40.0, Some(tol))?;
        worst = worst.max((40.0 * (x - r.arg[0]) - quartic.derivative().eval(r.arg[0])).abs());
    }
    rec.at_most("Moreau gradient identity [quartic]".into(), worst, 10.0 * tol, POINTS);
    Ok(())
}

fn envelope_suite(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    const POINTS: usize = 100;
    for (label, p) in sample_problems()? {
        let (n, m) = p.dims();
        let eta = if label.starts_with("figure1") { 40.0 } else { eta_for(p.as_ref()) };
        let tight = |z: &SplitPoint| -> Result<f64> { Ok(1e-13 * p.grad_norm(z)?.max(1.0)) };
        let (mut g_err, mut h_err, mut consist, mut lo_gap, mut hi_gap) = (0.0f64, 0.0f64, 0.0f64, f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..POINTS {
            let z = random_point(rng, n, m, 3.5);
            let v = z.stacked();
            let e = EnvelopeEval::new(p.as_ref(), &z, eta, Some(tight(&z)?))?;
            let g = e.gradient()?;
            consist = consist.max(g.discrepancy / e.prox().tol);
            let value = |w: &DVector<f64>| {
                let w = SplitPoint::from_stacked(w, n);
                EnvelopeEval::new(p.as_ref(), &w, eta, Some(tight(&w)?))?.value()
            };
            let grad = |w: &DVector<f64>| {
                let w = SplitPoint::from_stacked(w, n);
                Ok(EnvelopeEval::new(p.as_ref(), &w, eta, Some(tight(&w)?))?.gradient()?.grad.stacked())
            };
            let an = g.grad.stacked();
            g_err = g_err.max((central_gradient(&value, &v, 1.0 / 3.0)? - &an).norm() / an.norm().max(1.0));
            let h = e.hessian()?;
            let full = h.full();
            h_err = h_err.max((central_jacobian(&grad, &v, 0.25)? - &full).amax() / full.amax().max(1.0));

            let d = dominance(p.as_ref(), e.z_plus(), eta)?;
            let mx = curvature_bounds(eta, p.rho(), d.alpha_x)?.mu_env;
            let my = curvature_bounds(eta, p.rho(), d.alpha_y)?.mu_env;
            let ex = SymMatrix::symmetrized(&h.xx)?.eigenvalues();
            let ey = SymMatrix::symmetrized(&(-&h.yy))?.eigenvalues();
            lo_gap = lo_gap.min((ex[0] - mx).min(ey[0] - my));
            hi_gap = hi_gap.max((ex[ex.len() - 1] - eta).max(ey[ey.len() - 1] - eta));
        }
        rec.at_most(format!("envelope gradient vs differences of value, relative [{label}]"), g_err, 1e-5, POINTS);
        rec.at_most(format!("envelope Hessian vs differences of gradient, relative [{label}]"), h_err, 1e-4, POINTS);
        rec.at_most(format!("prox gradient vs gradient at prox point, in tolerances [{label}]"), consist, 10.0, POINTS);
        rec.at_least(format!("smallest envelope curvature minus (1/eta + 1/alpha)^-1 [{label}]"), lo_gap, -1e-6, POINTS);
        rec.at_most(format!("largest envelope curvature minus eta [{label}]"), hi_gap, 1e-6, POINTS);

        let beta_env = curvature_bounds(eta, p.rho(), 0.0)?.beta_env;
        let mut ratio = 0.0f64;
        for _ in 0..POINTS {
            let (z, w) = (random_point(rng, n, m, 3.5), random_point(rng, n, m, 3.5));
            let gz = EnvelopeEval::new(p.as_ref(), &z, eta, None)?.gradient()?.grad;
            let gw = EnvelopeEval::new(p.as_ref(), &w, eta, None)?.gradient()?.grad;
            ratio = ratio.max(gz.dist(&gw) / z.dist(&w));
        }
        rec.at_most(format!("envelope gradient Lipschitz ratio [{label}]"), ratio, beta_env + 1e-6, POINTS);
    }
    Ok(())
}

fn quadratic_suite(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    let (rho, a, eta) = (1.0, 2.0, 3.0);
    let p = RotationalQuadratic::new(rho, a, 2)?;
    for lambda in [0.5, 0.79, 0.8, 1.0] {
        let o = quadratic_oracle(rho, a, eta, lambda)?;
        let (mut map_err, mut ratio_err) = (0.0f64, 0.0f64);
        let mut z = random_point(rng, 2, 2, 1.0);
        for _ in 0..100 {
            let tol = default_tolerance(&p, &z)?;
            let next = ppm_step(&p, &z, eta, lambda, Some(tol))?;
            let expect = SplitPoint::new(&z.x * o.c - &z.y * o.d, &z.x * o.d + &z.y * o.c);
            map_err = map_err.max((next.stacked() - expect.stacked()).amax() / (10.0 * tol));
            ratio_err = ratio_err.max((next.norm() / z.norm() - o.factor.sqrt()).abs());
            z = next;
        }
        rec.at_most(format!("PPM step vs [C, -D; D, C] map, in units of 10 tol [lambda={lambda}]"), map_err, 1.0, 100);
        rec.at_most(format!("per-step norm ratio vs sqrt(C^2 + D^2) [lambda={lambda}]"), ratio_err, 1e-8, 100);
    }
    let boundary = quadratic_oracle(rho, a, eta, 0.8)?;
    rec.at_most("oracle factor at lambda = 0.8 minus 1".into(), (boundary.factor - 1.0).abs(), 1e-12, 1);

    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    for (rho, a) in [(1.0, 2.0), (1.0, 3.0), (0.5, 1.0), (2.0, 5.0)] {
        let p = RotationalQuadratic::new(rho, a, 1)?;
        for eta in [1.5 * rho, 2.0 * rho, 4.0 * rho] {
            let alpha = p.alpha(eta);
            if alpha <= 0.0 {
                continue;
            }
            let bound = lambda_bound_two_sided(eta, rho, alpha)?;
            for frac in [0.25, 0.5, 1.0] {
                let lambda = (frac * bound).min(1.0);
                let theory = rate_two_sided(eta, lambda, rho, alpha)?;
                let z = random_point(rng, 1, 1, 2.0);
                let next = ppm_step(&p, &z, eta, lambda, Some(1e-13))?;
                worst = worst.max(next.norm().powi(2) / z.norm().powi(2) - theory);
                samples += 1;
            }
        }
    }
    rec.at_most("squared contraction minus theoretical factor".into(), worst, 1e-9, samples);
    Ok(())
}

fn lyapunov_suite(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut problems = sample_problems()?;
    problems.retain(|(l, _)| !l.starts_with("bilinear"));
    let (mut neg, mut lo_ratio, mut hi_ratio) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    let mut count = 0;
    for (_, p) in &problems {
        let (n, m) = p.dims();
        let eta = if p.name() == "figure1" { 40.0 } else { eta_for(p.as_ref()) };
        let (rho, beta) = (p.rho(), p.beta());
        for _ in 0..40 {
            let z = random_point(rng, n, m, 3.5);
            let tol = default_tolerance(p.as_ref(), &z)?;
            let l = lyapunov(p.as_ref(), &z, eta, Some(tol))?;
            neg = neg.min(l + 10.0 * tol);
            let g2 = p.grad(&z)?.norm().powi(2);
            if g2 > 1e-12 {
                lo_ratio = lo_ratio.min(l / (g2 * (eta - rho) / (2.0 * (eta + beta).powi(2))));
                hi_ratio = hi_ratio.max(l / (g2 / (2.0 * (eta - rho))));
            }
            count += 1;
        }
    }
    rec.at_least("Lyapunov value plus 10 tol".into(), neg, 0.0, count);
    rec.at_least("Lyapunov over lower stationarity bound".into(), lo_ratio, 1.0 - 1e-9, count);
    rec.at_most("Lyapunov over upper stationarity bound".into(), hi_ratio, 1.0 + 1e-9, count);

    let p = make_figure1_problem(0.0)?;
    let r = 5f64.sqrt();
    let mut worst = 0.0f64;
    for z in [SplitPoint::scalar(0.0, 0.0), SplitPoint::scalar(r, r), SplitPoint::scalar(-r, 0.0)] {
        worst = worst.max(lyapunov(&p, &z, 40.0, Some(1e-12))?.abs());
    }
    rec.at_most("Lyapunov at stationary points".into(), worst, 1e-10, 3);

    let q = RotationalQuadratic::new(1.0, 2.0, 1)?;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let z = random_point(rng, 1, 1, 3.0);
        worst = worst.max(lyapunov_recurrence_slack(&q, &z, 3.0, q.alpha(3.0), None)?.abs());
    }
    rec.at_most("recurrence slack magnitude [rotational rho=1 a=2]".into(), worst, 1e-6, 50);

    let p = make_figure1_problem(10.0)?;
    let alpha = dominance_over_box(&p, &BoxDomain::cube(2, -4.0, 4.0), 40.0, 81)?.alpha();
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let z = random_point(rng, 1, 1, 3.5);
        worst = worst.min(lyapunov_recurrence_slack(&p, &z, 40.0, alpha, None)?);
    }
    rec.at_least("recurrence slack with grid-infimum alpha [figure1 a=10]".into(), worst, -1e-6, 50);

    // Smoothing in x leaves y-curvature at most −α_y, with α_y evaluated at
    // the inner minimizer (u*, y).
    let mut worst = f64::NEG_INFINITY;
    for a in [1.0, 10.0, 100.0] {
        let p = make_figure1_problem(a)?;
        for _ in 0..30 {
            let z = random_point(rng, 1, 1, 3.5);
            let tol = 1e-12 * p.grad_norm(&z)?.max(1.0);
            let h = 1e-3 * z.y[0].abs().max(1.0);
            let at = |dy: f64| partial_moreau_x(&p, &SplitPoint::scalar(z.x[0], z.y[0] + dy), 40.0, Some(tol));
            let mid = at(0.0)?;
            let second = |h: f64| -> Result<f64> { Ok((at(h)?.value - 2.0 * mid.value + at(-h)?.value) / (h * h)) };
            // Richardson extrapolation cancels the O(h²) truncation term.
            let curv = (4.0 * second(h / 2.0)? - second(h)?) / 3.0;
            let alpha_y = dominance(&p, &SplitPoint::new(mid.arg.clone(), z.y.clone()), 40.0)?.alpha_y;
            worst = worst.max(curv + alpha_y);
        }
    }
    rec.at_most("x-smoothed y-curvature plus alpha_y at inner minimizer".into(), worst, 1e-4, 90);

    // Nearly convex-concave objectives: one PPM step raises 𝓛 by at most
    // ε‖∇L(z₊)‖²/(2η²)·(1 + η/(η − ε)).
    let eps = 0.05;
    let near: Vec<Box<dyn MinimaxProblem>> = vec![
        Box::new(RotationalQuadratic::new(eps, 0.1, 1)?),
        Box::new(CoupledSeparable::new(
            Polynomial::new(vec![0.0, 0.0, -eps / 2.0, 0.0, 0.01]),
            Polynomial::new(vec![0.0, 0.0, -eps / 2.0, 0.0, 0.01]),
            nalgebra::DMatrix::from_element(1, 1, 0.1),
            Some(BoxDomain::cube(2, -4.0, 4.0)),
        )?),
    ];
    let mut worst = f64::NEG_INFINITY;
    for p in &near {
        let eta = 1.0;
        debug_assert!((p.rho() - eps).abs() < 1e-12);
        for _ in 0..50 {
            let z = random_point(rng, 1, 1, 3.0);
            let zp = prox(p.as_ref(), &z, eta, None)?.z_plus;
            let rise = lyapunov(p.as_ref(), &zp, eta, None)? - lyapunov(p.as_ref(), &z, eta, None)?;
            let l = p.grad_norm(&zp)?;
            let cap = eps * l * l / (2.0 * eta * eta) * (1.0 + eta / (eta - eps));
            worst = worst.max(rise - cap);
        }
    }
    rec.at_most("Lyapunov rise minus near-convex cap".into(), worst, 1e-6, 100);
    Ok(())
}
