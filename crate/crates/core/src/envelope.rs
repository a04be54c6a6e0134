//! Saddle envelope `L_η(z) = L(z₊) + (η/2)‖x₊ − x‖² − (η/2)‖y₊ − y‖²` with
//! `z₊ = prox_η(z)`, its derivatives, and interaction-dominance certificates.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::numerics::{inverse, sym_eig_min, SymMatrix};
use crate::problems::{BlockVector, BoxDomain, MinimaxProblem, SplitPoint};
use crate::prox::{check_eta, prox, ProxResult};

/// Relative tolerance for the full-matrix vs Schur-complement Hessian check.
pub const HESSIAN_AGREEMENT_TOL: f64 = 1e-8;

/// Envelope quantities at one query point, sharing a single prox solve.
pub struct EnvelopeEval<'a> {
    problem: &'a dyn MinimaxProblem,
    z: SplitPoint,
    eta: f64,
    prox: ProxResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeGradient {
    /// `(η(x − x₊), η(y₊ − y))`.
    pub grad: BlockVector,
    /// `∇L(z₊)`, equal to `grad` for an exact prox.
    pub cross_check: BlockVector,
    pub discrepancy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeHessian {
    pub xx: DMatrix<f64>,
    /// `n × m` cross block.
    pub xy: DMatrix<f64>,
    pub yy: DMatrix<f64>,
    /// `ηI − η²(ηI + ∇²ₓₓL + ∇²ₓᵧL(ηI − ∇²ᵧᵧL)⁻¹∇²ᵧₓL)⁻¹`.
    pub schur_xx: DMatrix<f64>,
    /// `−ηI + η²(ηI − ∇²ᵧᵧL + ∇²ᵧₓL(ηI + ∇²ₓₓL)⁻¹∇²ₓᵧL)⁻¹`.
    pub schur_yy: DMatrix<f64>,
}

impl EnvelopeHessian {
    pub fn full(&self) -> DMatrix<f64> {
        let (n, m) = (self.xx.nrows(), self.yy.nrows());
        let mut h = DMatrix::zeros(n + m, n + m);
        h.view_mut((0, 0), (n, n)).copy_from(&self.xx);
        h.view_mut((n, n), (m, m)).copy_from(&self.yy);
        h.view_mut((0, n), (n, m)).copy_from(&self.xy);
        h.view_mut((n, 0), (m, n)).copy_from(&self.xy.transpose());
        h
    }
}

impl<'a> EnvelopeEval<'a> {
    pub fn new(problem: &'a dyn MinimaxProblem, z: &SplitPoint, eta: f64, tol: Option<f64>) -> Result<Self> {
        let prox = prox(problem, z, eta, tol)?;
        Ok(Self { problem, z: z.clone(), eta, prox })
    }

    pub fn prox(&self) -> &ProxResult {
        &self.prox
    }

    pub fn z_plus(&self) -> &SplitPoint {
        &self.prox.z_plus
    }

    pub fn value(&self) -> Result<f64> {
        let zp = &self.prox.z_plus;
        let half = 0.5 * self.eta;
        Ok(self.problem.value(zp)? + half * (&zp.x - &self.z.x).norm_squared()
            - half * (&zp.y - &self.z.y).norm_squared())
    }

    /// The prox-based gradient together with the `∇L(z₊)` cross-check.
    /// Fails if the two differ by more than `10·tol`.
    pub fn gradient(&self) -> Result<EnvelopeGradient> {
        let zp = &self.prox.z_plus;
        let grad = BlockVector { x: (&self.z.x - &zp.x) * self.eta, y: (&zp.y - &self.z.y) * self.eta };
        let cross_check = self.problem.grad(zp)?;
        let discrepancy = grad.dist(&cross_check);
        let tolerance = 10.0 * self.prox.tol;
        if discrepancy > tolerance {
            return Err(Error::Consistency { what: "envelope gradient vs gradient at prox point", discrepancy, tolerance });
        }
        Ok(EnvelopeGradient { grad, cross_check, discrepancy })
    }

    /// Hessian from `ηI − η²(ηI + J)⁻¹` with `J = [Lxx, Lxy; −Lyx, −Lyy]`
    /// at `z₊`, checked against the blockwise Schur-complement formulas.
    pub fn hessian(&self) -> Result<EnvelopeHessian> {
        let (n, m) = self.problem.dims();
        let eta = self.eta;
        let zp = &self.prox.z_plus;
        let (lxx, lyy, lxy) = (self.problem.hess_xx(zp)?, self.problem.hess_yy(zp)?, self.problem.hess_xy(zp)?);
        let mut shifted = DMatrix::identity(n + m, n + m) * eta;
        shifted.view_mut((0, 0), (n, n)).zip_apply(&lxx, |a, b| *a += b);
        shifted.view_mut((0, n), (n, m)).zip_apply(&lxy, |a, b| *a += b);
        shifted.view_mut((n, 0), (m, n)).zip_apply(&lxy.transpose(), |a, b| *a -= b);
        shifted.view_mut((n, n), (m, m)).zip_apply(&lyy, |a, b| *a -= b);
        let k = DMatrix::identity(n + m, n + m) * eta - inverse(&shifted)? * (eta * eta);

        let xx = k.view((0, 0), (n, n)).into_owned();
        let xy = k.view((0, n), (n, m)).into_owned();
        let yy = -k.view((n, n), (m, m)).into_owned();

        let (ix, iy) = (DMatrix::<f64>::identity(n, n), DMatrix::<f64>::identity(m, m));
        let sx = &ix * eta + &lxx + &lxy * inverse(&(&iy * eta - &lyy))? * lxy.transpose();
        let schur_xx = &ix * eta - inverse(&sx)? * (eta * eta);
        let sy = &iy * eta - &lyy + lxy.transpose() * inverse(&(&ix * eta + &lxx))? * &lxy;
        let schur_yy = -(&iy * eta) + inverse(&sy)? * (eta * eta);

        let scale = k.amax().max(1.0);
        let discrepancy = (&schur_xx - &xx).amax().max((&schur_yy - &yy).amax());
        let tolerance = HESSIAN_AGREEMENT_TOL * scale;
        if discrepancy > tolerance {
            return Err(Error::Consistency { what: "envelope Hessian full vs Schur form", discrepancy, tolerance });
        }
        Ok(EnvelopeHessian { xx, xy, yy, schur_xx, schur_yy })
    }
}

pub fn envelope_value(problem: &dyn MinimaxProblem, z: &SplitPoint, eta: f64, tol: Option<f64>) -> Result<f64> {
    EnvelopeEval::new(problem, z, eta, tol)?.value()
}

pub fn envelope_grad(
    problem: &dyn MinimaxProblem,
    z: &SplitPoint,
    eta: f64,
    tol: Option<f64>,
) -> Result<EnvelopeGradient> {
    EnvelopeEval::new(problem, z, eta, tol)?.gradient()
}

pub fn envelope_hessian(
    problem: &dyn MinimaxProblem,
    z: &SplitPoint,
    eta: f64,
    tol: Option<f64>,
) -> Result<EnvelopeHessian> {
    EnvelopeEval::new(problem, z, eta, tol)?.hessian()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    /// `λ_min(∇²ₓₓL + ∇²ₓᵧL(ηI − ∇²ᵧᵧL)⁻¹∇²ᵧₓL)`.
    pub alpha_x: f64,
    /// `λ_min(−∇²ᵧᵧL + ∇²ᵧₓL(ηI + ∇²ₓₓL)⁻¹∇²ₓᵧL)`.
    pub alpha_y: f64,
    pub eta: f64,
    pub z: SplitPoint,
}

impl DominanceReport {
    pub fn alpha(&self) -> f64 {
        self.alpha_x.min(self.alpha_y)
    }
}

/// Pointwise interaction dominance at `z`.
pub fn dominance(problem: &dyn MinimaxProblem, z: &SplitPoint, eta: f64) -> Result<DominanceReport> {
    check_eta(problem, eta)?;
    let (n, m) = problem.dims();
    z.check(n, m)?;
    let (lxx, lyy, lxy) = (problem.hess_xx(z)?, problem.hess_yy(z)?, problem.hess_xy(z)?);
    let (ix, iy) = (DMatrix::<f64>::identity(n, n), DMatrix::<f64>::identity(m, m));
    let singular = |e: Error| match e {
        Error::Singular { condition } => param(format!("shifted diagonal block is singular (condition {condition:.3e})")),
        other => other,
    };
    let dx = &lxx + &lxy * inverse(&(&iy * eta - &lyy)).map_err(singular)? * lxy.transpose();
    let dy = -&lyy + lxy.transpose() * inverse(&(&ix * eta + &lxx)).map_err(singular)? * &lxy;
    Ok(DominanceReport {
        alpha_x: sym_eig_min(&SymMatrix::symmetrized(&dx)?)?,
        alpha_y: sym_eig_min(&SymMatrix::symmetrized(&dy)?)?,
        eta,
        z: z.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DominanceEvidence {
    /// The Hessian is constant, so the pointwise value holds everywhere.
    Certified,
    /// Infimum over grid samples; a lower-confidence estimate only.
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDominance {
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub evidence: DominanceEvidence,
    pub samples: usize,
}

impl BoxDominance {
    pub fn alpha(&self) -> f64 {
        self.alpha_x.min(self.alpha_y)
    }
}

/// Infimum of pointwise dominance over a `resolution`-per-axis grid on `domain`.
pub fn dominance_over_box(
    problem: &dyn MinimaxProblem,
    domain: &BoxDomain,
    eta: f64,
    resolution: usize,
) -> Result<BoxDominance> {
    let (n, m) = problem.dims();
    if domain.dim() != n + m {
        return Err(Error::Dimension { expected: n + m, got: domain.dim() });
    }
    if problem.constant_hessian() {
        let center = domain.grid(n, 1).remove(0);
        let r = dominance(problem, &center, eta)?;
        return Ok(BoxDominance { alpha_x: r.alpha_x, alpha_y: r.alpha_y, evidence: DominanceEvidence::Certified, samples: 1 });
    }
    if resolution < 2 {
        return Err(param("grid resolution must be at least 2 per axis"));
    }
    let grid = domain.grid(n, resolution);
    let reports: Vec<DominanceReport> = grid.par_iter().map(|z| dominance(problem, z, eta)).collect::<Result<_>>()?;
    let alpha_x = reports.iter().map(|r| r.alpha_x).fold(f64::INFINITY, f64::min);
    let alpha_y = reports.iter().map(|r| r.alpha_y).fold(f64::INFINITY, f64::min);
    Ok(BoxDominance { alpha_x, alpha_y, evidence: DominanceEvidence::Sampled, samples: grid.len() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBounds {
    /// Strong convexity (concavity) modulus `(η⁻¹ + α⁻¹)⁻¹` of the envelope.
    pub mu_env: f64,
    /// Gradient Lipschitz constant `max{η, |η⁻¹ − ρ⁻¹|⁻¹}`.
    pub beta_env: f64,
}

pub fn curvature_bounds(eta: f64, rho: f64, alpha: f64) -> Result<CurvatureBounds> {
    if !eta.is_finite() || !(eta > rho) || eta <= 0.0 {
        return Err(param(format!("need eta > max(rho, 0), got eta={eta}, rho={rho}")));
    }
    if alpha.is_nan() || alpha == -eta {
        return Err(param(format!("alpha = {alpha} is a pole of the envelope modulus")));
    }
    let mu_env = if alpha == 0.0 {
        0.0
    } else if alpha.is_infinite() {
        if alpha > 0.0 { eta } else { return Err(param("alpha must not be -inf")) }
    } else {
        eta * alpha / (eta + alpha)
    };
    let beta_env = eta.max((1.0 / eta - 1.0 / rho).abs().recip());
    Ok(CurvatureBounds { mu_env, beta_env })
}
