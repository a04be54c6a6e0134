use nalgebra::{DMatrix, DVector};

use super::{Constants, MinimaxProblem, SplitPoint};
use crate::error::{param, Result};

/// `L(x, y) = -(ρ/2)‖x‖² + a·xᵀy + (ρ/2)‖y‖²` with `x, y ∈ ℝⁿ`.
///
/// Its interaction dominance is `α = -ρ + a²/(η - ρ)` in both blocks and every
/// damped proximal step is an exact rotation-scaling of `z`.
#[derive(Clone, Debug)]
pub struct RotationalQuadratic {
    pub rho: f64,
    pub a: f64,
    pub n: usize,
    constants: Constants,
}

impl RotationalQuadratic {
    pub fn new(rho: f64, a: f64, n: usize) -> Result<Self> {
        if !(rho >= 0.0) || !a.is_finite() || !rho.is_finite() {
            return Err(param(format!("rotational quadratic needs finite rho >= 0 and a, got rho={rho}, a={a}")));
        }
        if n == 0 {
            return Err(param("dimension must be positive"));
        }
        let constants = Constants {
            rho,
            beta: rho.hypot(a),
            lipschitz_hessian: Some(0.0),
            interaction_bound: Some(a.abs()),
            interaction_lipschitz: Some(0.0),
            domain: None,
        };
        Ok(Self { rho, a, n, constants })
    }

    /// Interaction dominance constant for proximal parameter `eta`.
    pub fn alpha(&self, eta: f64) -> f64 {
        -self.rho + self.a * self.a / (eta - self.rho)
    }
}

impl MinimaxProblem for RotationalQuadratic {
    fn name(&self) -> &str {
        "rotational_quadratic"
    }

    fn dims(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    fn value(&self, z: &SplitPoint) -> Result<f64> {
        z.check(self.n, self.n)?;
        Ok(-0.5 * self.rho * z.x.norm_squared() + self.a * z.x.dot(&z.y)
            + 0.5 * self.rho * z.y.norm_squared())
    }

    fn grad_x(&self, z: &SplitPoint) -> Result<DVector<f64>> {
        z.check(self.n, self.n)?;
        Ok(&z.x * (-self.rho) + &z.y * self.a)
    }

    fn grad_y(&self, z: &SplitPoint) -> Result<DVector<f64>> {
        z.check(self.n, self.n)?;
        Ok(&z.x * self.a + &z.y * self.rho)
    }

    fn hess_xx(&self, _z: &SplitPoint) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(self.n, self.n) * (-self.rho))
    }

    fn hess_yy(&self, _z: &SplitPoint) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(self.n, self.n) * self.rho)
    }

    fn hess_xy(&self, _z: &SplitPoint) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(self.n, self.n) * self.a)
    }

    fn constants(&self) -> &Constants {
        &self.constants
    }

    fn constant_hessian(&self) -> bool {
        true
    }
}
