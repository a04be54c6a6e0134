//! Minimax problem interface and the concrete problem families.
//!
//! Every problem exposes its value, gradient blocks and Hessian blocks, plus
//! the curvature constants the theory needs: the weak convexity-concavity
//! modulus `rho`, the Hessian norm bound `beta`, and optionally the
//! Lipschitz-Hessian constant `H` and the interaction constants `delta`, `xi`.
//! Constants may be declared valid only on a box, in which case the box is
//! carried along and sampling-based validation stays inside it.

mod finite_diff;
mod point;
mod polynomial;
mod quadratic;
mod separable;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

pub use finite_diff::{finite_diff_problem, FiniteDiffProblem, StepPolicy, ValueFn};
pub use point::{BlockVector, SplitPoint};
pub use polynomial::Polynomial;
pub use quadratic::RotationalQuadratic;
pub use separable::{make_figure1_problem, CoupledSeparable};

/// Axis-aligned box over the stacked coordinates `[x; y]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(param("box bounds have different lengths"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h)) {
            return Err(param("box lower bound exceeds upper bound"));
        }
        Ok(Self { lo, hi })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self { lo: vec![lo; dim], hi: vec![hi; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, z: &SplitPoint) -> bool {
        let v = z.stacked();
        v.len() == self.dim()
            && v.iter().zip(self.lo.iter().zip(&self.hi)).all(|(c, (l, h))| *l <= *c && *c <= *h)
    }

    /// Uniform tensor grid with `resolution` points per axis, ordered with
    /// the last coordinate varying fastest.
    pub fn grid(&self, n: usize, resolution: usize) -> Vec<SplitPoint> {
        let dim = self.dim();
        let axis = |k: usize, i: usize| {
            if resolution == 1 {
                0.5 * (self.lo[k] + self.hi[k])
            } else {
                self.lo[k] + (self.hi[k] - self.lo[k]) * i as f64 / (resolution - 1) as f64
            }
        };
        let total = resolution.pow(dim as u32);
        (0..total)
            .map(|mut idx| {
                let mut v = DVector::zeros(dim);
                for k in (0..dim).rev() {
                    v[k] = axis(k, idx % resolution);
                    idx /= resolution;
                }
                SplitPoint::from_stacked(&v, n)
            })
            .collect()
    }
}

/// Curvature and interaction constants certified for a problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Weak convexity-concavity modulus: `∇²ₓₓL ⪰ -ρI` and `-∇²ᵧᵧL ⪰ -ρI`.
    pub rho: f64,
    /// Bound on the full Hessian norm.
    pub beta: f64,
    /// Lipschitz constant of the Hessian.
    pub lipschitz_hessian: Option<f64>,
    /// Bound on `‖∇²ₓᵧL‖`.
    pub interaction_bound: Option<f64>,
    /// Lipschitz constant of the diagonal Hessian blocks in the opposing variable.
    pub interaction_lipschitz: Option<f64>,
    /// Box on which the constants hold; `None` means globally.
    pub domain: Option<BoxDomain>,
}

/// A twice differentiable objective `L(x, y)` to be minimized in `x` and
/// maximized in `y`.
///
/// Implementations are immutable; every method is a pure function of its
/// arguments and may be called concurrently.
pub trait MinimaxProblem: Send + Sync {
    fn name(&self) -> &str;

    /// `(n, m)`: dimensions of `x` and `y`.
    fn dims(&self) -> (usize, usize);

    fn value(&self, z: &SplitPoint) -> Result<f64>;
    fn grad_x(&self, z: &SplitPoint) -> Result<DVector<f64>>;
    fn grad_y(&self, z: &SplitPoint) -> Result<DVector<f64>>;
    fn hess_xx(&self, z: &SplitPoint) -> Result<DMatrix<f64>>;
    fn hess_yy(&self, z: &SplitPoint) -> Result<DMatrix<f64>>;
    /// The `n × m` cross block `∇²ₓᵧL`.
    fn hess_xy(&self, z: &SplitPoint) -> Result<DMatrix<f64>>;

    fn constants(&self) -> &Constants;

    /// True when the Hessian does not depend on `z`, which lets pointwise
    /// certificates hold globally.
    fn constant_hessian(&self) -> bool {
        false
    }

    fn rho(&self) -> f64 {
        self.constants().rho
    }

    fn beta(&self) -> f64 {
        self.constants().beta
    }

    fn grad(&self, z: &SplitPoint) -> Result<BlockVector> {
        Ok(BlockVector { x: self.grad_x(z)?, y: self.grad_y(z)? })
    }

    fn grad_norm(&self, z: &SplitPoint) -> Result<f64> {
        Ok(self.grad(z)?.norm())
    }

    /// The full symmetric Hessian `[∇²ₓₓ, ∇²ₓᵧ; ∇²ᵧₓ, ∇²ᵧᵧ]`.
    fn hessian(&self, z: &SplitPoint) -> Result<DMatrix<f64>> {
        let (n, m) = self.dims();
        let mut h = DMatrix::zeros(n + m, n + m);
        let xy = self.hess_xy(z)?;
        h.view_mut((0, 0), (n, n)).copy_from(&self.hess_xx(z)?);
        h.view_mut((n, n), (m, m)).copy_from(&self.hess_yy(z)?);
        h.view_mut((0, n), (n, m)).copy_from(&xy);
        h.view_mut((n, 0), (m, n)).copy_from(&xy.transpose());
        Ok(h)
    }
}
