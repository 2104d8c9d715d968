use serde::{Deserialize, Serialize};

use super::TrendModelParams;
use crate::error::{check_non_negative, check_positive, ParamError};

/// Relative width of the band around `1/tau = lambda` evaluated by series.
const SINGULAR_BAND: f64 = 1e-8;

/// Variance of the exponential moving average of returns at a given time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterVariance {
    pub variance: f64,
    /// Set when `|1/tau - lambda| < 1e-8 lambda` and the removable
    /// singularity was evaluated through its limit.
    pub singular_branch: bool,
}

/// `V[mu~_t]` for the EMA of duration `tau` started at `mu~_0 = 0`.
///
/// Pass `t = f64::INFINITY` for the stationary limit.
pub fn filter_variance(
    p: &TrendModelParams,
    tau: f64,
    t: f64,
) -> Result<FilterVariance, ParamError> {
    p.validate()?;
    check_positive("tau", tau)?;
    if !(t >= 0.0) {
        return Err(ParamError::Invalid {
            name: "t",
            value: t,
            reason: "must be >= 0",
        });
    }
    let k = 1.0 / tau;
    let lambda = p.lambda;
    let singular_branch = (k - lambda).abs() < SINGULAR_BAND * lambda;
    if t.is_infinite() {
        return Ok(FilterVariance {
            variance: stationary_filter_variance(p, tau)?,
            singular_branch,
        });
    }

    if t == 0.0 {
        return Ok(FilterVariance {
            variance: 0.0,
            singular_branch,
        });
    }

    let ss2 = p.sigma_s * p.sigma_s;
    let noise_term = ss2 / (2.0 * tau) * -(-2.0 * k * t).exp_m1();

    // c = e^{-kt} (e^{(k-lambda)t} - 1)/(k - lambda), arranged so that no
    // intermediate overflows and the k = lambda point is a limit, not 0/0
    let x = (k - lambda) * t;
    let c = if singular_branch {
        t * (-k * t).exp() * (1.0 + x / 2.0 + x * x / 6.0)
    } else if x <= 0.0 {
        t * (-k * t).exp() * (x.exp_m1() / x)
    } else {
        t * (-lambda * t).exp() * (-(-x).exp_m1() / x)
    };
    let ekt = (-k * t).exp();
    let bracket = -(-2.0 * k * t).exp_m1() / (k + lambda) - 2.0 * k * ekt * c / (k + lambda)
        - k * c * c;
    let trend_term = k * p.sigma_mu * p.sigma_mu / (2.0 * lambda) * bracket;

    Ok(FilterVariance {
        variance: noise_term + trend_term,
        singular_branch,
    })
}

/// `sigma_s^2/(2 tau) + sigma_mu^2 / (2 lambda (1 + lambda tau))`.
pub fn stationary_filter_variance(p: &TrendModelParams, tau: f64) -> Result<f64, ParamError> {
    p.validate()?;
    check_positive("tau", tau)?;
    check_non_negative("sigma_mu", p.sigma_mu)?;
    Ok(p.sigma_s * p.sigma_s / (2.0 * tau)
        + p.sigma_mu * p.sigma_mu / (2.0 * p.lambda * (1.0 + p.lambda * tau)))
}
