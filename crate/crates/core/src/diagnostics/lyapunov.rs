use crate::error::Result;
use crate::problems::{MinimaxProblem, SplitPoint};
use crate::prox::{partial_moreau_x, partial_moreau_y, prox};

/// `(η⁻¹ − ρ⁻¹)⁻¹`; zero when `ρ = 0`.
pub fn moreau_coefficient(eta: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        0.0
    } else {
        1.0 / (1.0 / eta - 1.0 / rho)
    }
}

/// `𝓛(z) = −e_η{−L(x,·)}(y) − e_η{L(·,y)}(x)`: the y-smoothed value minus
/// the x-smoothed value. Nonnegative, and zero exactly at stationary points.
pub fn lyapunov(problem: &dyn MinimaxProblem, z: &SplitPoint, eta: f64, tol: Option<f64>) -> Result<f64> {
    let upper = partial_moreau_y(problem, z, eta, tol)?;
    let lower = partial_moreau_x(problem, z, eta, tol)?;
    Ok(upper.value - lower.value)
}

/// `𝓛(z) − 𝓛(z₊) − ½(α + (η⁻¹ − ρ⁻¹)⁻¹)‖z₊ − z‖²` for `z₊ = prox_η(z)`.
pub fn lyapunov_recurrence_slack(
    problem: &dyn MinimaxProblem,
    z: &SplitPoint,
    eta: f64,
    alpha: f64,
    tol: Option<f64>,
) -> Result<f64> {
    let zp = prox(problem, z, eta, tol)?.z_plus;
    let before = lyapunov(problem, z, eta, tol)?;
    let after = lyapunov(problem, &zp, eta, tol)?;
    let coeff = alpha + moreau_coefficient(eta, problem.rho());
    Ok(before - after - 0.5 * coeff * (&zp.x - &z.x).norm_squared() - 0.5 * coeff * (&zp.y - &z.y).norm_squared())
}
