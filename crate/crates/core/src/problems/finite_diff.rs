use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{Constants, MinimaxProblem, SplitPoint};
use crate::error::{param, Error, Result};

pub type ValueFn = Arc<dyn Fn(&SplitPoint) -> f64 + Send + Sync>;

/// Step-size rule `h = max(1, |zᵢ|) · ε^p` for central differences.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepPolicy {
    pub gradient_exponent: f64,
    pub hessian_exponent: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self { gradient_exponent: 1.0 / 3.0, hessian_exponent: 0.25 }
    }
}

impl StepPolicy {
    fn step(exponent: f64, coord: f64) -> f64 {
        coord.abs().max(1.0) * f64::EPSILON.powf(exponent)
    }
}

/// A problem defined only by its value; derivatives come from central
/// differences of the value.
#[derive(Clone)]
pub struct FiniteDiffProblem {
    value_fn: ValueFn,
    n: usize,
    m: usize,
    policy: StepPolicy,
    constants: Constants,
}

impl std::fmt::Debug for FiniteDiffProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiniteDiffProblem")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("policy", &self.policy)
            .finish()
    }
}

/// Wraps a value function into a [`MinimaxProblem`]. The caller supplies the
/// curvature constants since they cannot be inferred from samples.
pub fn finite_diff_problem(
    value_fn: ValueFn,
    n: usize,
    m: usize,
    policy: StepPolicy,
    constants: Constants,
) -> Result<FiniteDiffProblem> {
    if n == 0 || m == 0 {
        return Err(param("dimensions must be positive"));
    }
    Ok(FiniteDiffProblem { value_fn, n, m, policy, constants })
}

impl FiniteDiffProblem {
    fn eval(&self, v: &DVector<f64>) -> Result<f64> {
        let z = SplitPoint::from_stacked(v, self.n);
        let val = (self.value_fn)(&z);
        if val.is_finite() {
            Ok(val)
        } else {
            Err(Error::NonFinite(format!("value {val} at stencil point {:?}", v.as_slice())))
        }
    }

    fn full_gradient(&self, z: &SplitPoint) -> Result<DVector<f64>> {
        z.check(self.n, self.m)?;
        let base = z.stacked();
        let mut g = DVector::zeros(base.len());
        for i in 0..base.len() {
            let h = StepPolicy::step(self.policy.gradient_exponent, base[i]);
            let mut p = base.clone();
            p[i] += h;
            let fp = self.eval(&p)?;
            p[i] = base[i] - h;
            let fm = self.eval(&p)?;
            g[i] = (fp - fm) / (2.0 * h);
        }
        Ok(g)
    }

    fn full_hessian(&self, z: &SplitPoint) -> Result<DMatrix<f64>> {
        z.check(self.n, self.m)?;
        let base = z.stacked();
        let d = base.len();
        let steps: Vec<f64> =
            base.iter().map(|&c| StepPolicy::step(self.policy.hessian_exponent, c)).collect();
        let f0 = self.eval(&base)?;
        let mut h = DMatrix::zeros(d, d);
        for i in 0..d {
            let mut p = base.clone();
            p[i] += steps[i];
            let fp = self.eval(&p)?;
            p[i] = base[i] - steps[i];
            let fm = self.eval(&p)?;
            h[(i, i)] = (fp - 2.0 * f0 + fm) / (steps[i] * steps[i]);
            for j in 0..i {
                let corner = |si: f64, sj: f64| {
                    let mut q = base.clone();
                    q[i] += si * steps[i];
                    q[j] += sj * steps[j];
                    self.eval(&q)
                };
                let mixed = corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)?
                    + corner(-1.0, -1.0)?;
                let v = mixed / (4.0 * steps[i] * steps[j]);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        Ok(h)
    }
}

impl MinimaxProblem for FiniteDiffProblem {
    fn name(&self) -> &str {
        "finite_difference"
    }

    fn dims(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    fn value(&self, z: &SplitPoint) -> Result<f64> {
        z.check(self.n, self.m)?;
        self.eval(&z.stacked())
    }

    fn grad_x(&self, z: &SplitPoint) -> Result<DVector<f64>> {
        Ok(self.full_gradient(z)?.rows(0, self.n).into_owned())
    }

    fn grad_y(&self, z: &SplitPoint) -> Result<DVector<f64>> {
        Ok(self.full_gradient(z)?.rows(self.n, self.m).into_owned())
    }

    fn grad(&self, z: &SplitPoint) -> Result<super::BlockVector> {
        let g = self.full_gradient(z)?;
        Ok(super::BlockVector {
            x: g.rows(0, self.n).into_owned(),
            y: g.rows(self.n, self.m).into_owned(),
        })
    }

    fn hess_xx(&self, z: &SplitPoint) -> Result<DMatrix<f64>> {
        Ok(self.full_hessian(z)?.view((0, 0), (self.n, self.n)).into_owned())
    }

    fn hess_yy(&self, z: &SplitPoint) -> Result<DMatrix<f64>> {
        Ok(self.full_hessian(z)?.view((self.n, self.n), (self.m, self.m)).into_owned())
    }

    fn hess_xy(&self, z: &SplitPoint) -> Result<DMatrix<f64>> {
        Ok(self.full_hessian(z)?.view((0, self.n), (self.n, self.m)).into_owned())
    }

    fn hessian(&self, z: &SplitPoint) -> Result<DMatrix<f64>> {
        self.full_hessian(z)
    }

    fn constants(&self) -> &Constants {
        &self.constants
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::RotationalQuadratic;

    fn global(rho: f64, beta: f64) -> Constants {
        Constants {
            rho,
            beta,
            lipschitz_hessian: None,
            interaction_bound: None,
            interaction_lipschitz: None,
            domain: None,
        }
    }

    #[test]
    fn bilinear_gradient() {
        let p = finite_diff_problem(Arc::new(|z: &SplitPoint| z.x[0] * z.y[0]), 1, 1,
            StepPolicy::default(), global(0.0, 1.0)).unwrap();
        let g = p.grad(&SplitPoint::scalar(2.0, 3.0)).unwrap();
        assert!((g.x[0] - 3.0).abs() < 1e-6);
        assert!((g.y[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn constant_value_has_zero_gradient() {
        let p = finite_diff_problem(Arc::new(|_: &SplitPoint| 4.25), 2, 1,
            StepPolicy::default(), global(0.0, 0.0)).unwrap();
        let z = SplitPoint::from_slices(&[1.0, -7.0], &[0.1]);
        assert!(p.grad(&z).unwrap().norm() < 1e-8);
    }

    #[test]
    fn wrapped_quadratic_hessian_matches_analytic() {
        let q = RotationalQuadratic::new(1.0, 2.0, 1).unwrap();
        let q2 = q.clone();
        let p = finite_diff_problem(Arc::new(move |z: &SplitPoint| q2.value(z).unwrap()), 1, 1,
            StepPolicy::default(), q.constants().clone()).unwrap();
        for z in [SplitPoint::scalar(0.3, -1.2), SplitPoint::scalar(5.0, 2.0)] {
            let diff = (p.hessian(&z).unwrap() - q.hessian(&z).unwrap()).abs().max();
            assert!(diff < 1e-4, "hessian mismatch {diff}");
        }
    }

    #[test]
    fn non_finite_stencil_is_an_error() {
        let p = finite_diff_problem(
            Arc::new(|z: &SplitPoint| if z.x[0] > 1.0 { f64::NAN } else { z.x[0] }),
            1, 1, StepPolicy::default(), global(0.0, 0.0)).unwrap();
        assert!(matches!(p.grad(&SplitPoint::scalar(1.0, 0.0)), Err(Error::NonFinite(_))));
        assert!(p.grad(&SplitPoint::scalar(0.0, 0.0)).is_ok());
    }
}
