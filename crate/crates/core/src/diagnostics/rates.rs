use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Exact damped-PPM contraction for the rotational quadratic: each step
/// applies `[C, −D; D, C]`, scaling `‖z‖²` by `C² + D²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticOracle {
    pub alpha: f64,
    pub c: f64,
    pub d: f64,
    pub factor: f64,
    pub converges: bool,
    pub cycles: bool,
}

pub fn quadratic_oracle(rho: f64, a: f64, eta: f64, lambda: f64) -> Result<QuadraticOracle> {
    if !(eta > rho) {
        return Err(param(format!("eta must exceed rho, got eta={eta}, rho={rho}")));
    }
    let alpha = -rho + a * a / (eta - rho);
    let c = 1.0 - lambda * alpha / (eta + alpha);
    let d = lambda * eta * a / ((eta + alpha) * (eta - rho));
    let factor = c * c + d * d;
    Ok(QuadraticOracle { alpha, c, d, factor, converges: factor < 1.0, cycles: (factor - 1.0).abs() <= 1e-12 })
}

fn saturation(eta: f64, rho: f64) -> f64 {
    if rho <= 0.0 {
        1.0
    } else {
        (eta / rho - 1.0).powi(2).min(1.0)
    }
}

fn check_two_sided(eta: f64, rho: f64, alpha: f64) -> Result<()> {
    if !(alpha > 0.0) {
        return Err(param(format!("alpha must be positive, got {alpha}")));
    }
    if !(eta > rho) || !(eta > 0.0) {
        return Err(param(format!("eta must exceed max(rho, 0), got eta={eta}, rho={rho}")));
    }
    Ok(())
}

/// Largest damping with guaranteed contraction: `2·min{1, (η/ρ − 1)²}/(η/α + 1)`.
pub fn lambda_bound_two_sided(eta: f64, rho: f64, alpha: f64) -> Result<f64> {
    check_two_sided(eta, rho, alpha)?;
    Ok(2.0 * saturation(eta, rho) / (eta / alpha + 1.0))
}

/// Squared-distance contraction `1 − 2λ/(η/α + 1) + λ²/min{1, (η/ρ − 1)²}`.
pub fn rate_two_sided(eta: f64, lambda: f64, rho: f64, alpha: f64) -> Result<f64> {
    let bound = lambda_bound_two_sided(eta, rho, alpha)?;
    if !(lambda >= 0.0) || lambda > bound * (1.0 + 1e-12) {
        return Err(param(format!("lambda = {lambda} outside [0, {bound}]")));
    }
    Ok(1.0 - 2.0 * lambda / (eta / alpha + 1.0) + lambda * lambda / saturation(eta, rho))
}

/// Damping pair `(λ, γ)` for one-sided dominance, with the unspecified
/// order constants set to `c`.
pub fn suggest_one_sided_params(eta: f64, rho: f64, alpha: f64, c: f64) -> Result<(f64, f64)> {
    check_two_sided(eta, rho, alpha)?;
    if !(c > 0.0) || !c.is_finite() {
        return Err(param(format!("multiplier must be positive and finite, got {c}")));
    }
    let ratio = if rho <= 0.0 { f64::INFINITY } else { (eta / rho - 1.0).abs() };
    let lambda = c * ratio.powi(3).min(1.0) / (1.0 + eta / alpha).powi(2);
    let gamma = c * ratio.min(1.0);
    Ok((lambda.min(1.0), gamma.min(1.0)))
}
