//! Lyapunov function, regime classification, rate calculators and the
//! weak-interaction initialization.

mod classify;
mod lyapunov;
mod rates;
mod weak;

pub use classify::{classify, ClassifyOptions, RegimeLabel};
pub use lyapunov::{lyapunov, lyapunov_recurrence_slack, moreau_coefficient};
pub use rates::{
    lambda_bound_two_sided, quadratic_oracle, rate_two_sided, suggest_one_sided_params, QuadraticOracle,
};
pub use weak::{init_weak, local_curvature, weak_regime_check, WeakRegimeReport, INIT_WEAK_BUDGET};
