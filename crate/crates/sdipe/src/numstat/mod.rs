//! Numerical primitives: link functions, least squares, logistic
//! regression via IRLS, and posterior parameter draws for proper
//! multiple imputation.

mod logistic;
mod ols;
mod rng;

pub use logistic::{fit_logistic, FittedLogisticModel};
pub use ols::{draw_linear_posterior, fit_ols, FittedLinearModel};
pub use rng::RngStream;

use crate::error::{Error, Result};

/// Inverse logit, computed without overflow on either tail.
pub fn expit(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("expit argument must be finite, got {x}")));
    }
    Ok(expit_unchecked(x))
}

/// Inverse logit for callers that already know the argument is finite.
#[inline]
pub(crate) fn expit_unchecked(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Log odds of a probability in the open unit interval.
pub fn logit(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("logit argument must lie in (0,1), got {p}")));
    }
    Ok((p / (1.0 - p)).ln())
}
