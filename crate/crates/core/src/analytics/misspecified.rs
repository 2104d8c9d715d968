use serde::{Deserialize, Serialize};

use super::TrendModelParams;
use crate::error::{check_non_negative, check_positive, ParamError};

/// Leverage `m` applied to an EMA of duration `tau` (years).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalStrategyConfig {
    pub m: f64,
    pub tau: f64,
}

impl OptimalStrategyConfig {
    pub fn new(m: f64, tau: f64) -> Result<Self, ParamError> {
        check_non_negative("m", m)?;
        check_positive("tau", tau)?;
        Ok(Self { m, tau })
    }
}

/// Asymptotic expected log-return of the strategy `omega = m mu~ / sigma_s^2`
/// driven by an EMA of duration `tau`:
///
/// `m (2 tau (2-m) SNR - m (lambda tau + 1)) / (4 tau (lambda tau + 1))`.
pub fn misspecified_rate(
    p: &TrendModelParams,
    c: &OptimalStrategyConfig,
) -> Result<f64, ParamError> {
    p.validate()?;
    check_non_negative("m", c.m)?;
    check_positive("tau", c.tau)?;
    Ok(rate_snr_form(p.lambda, p.snr(), c.m, c.tau))
}

pub(crate) fn rate_snr_form(lambda: f64, snr: f64, m: f64, tau: f64) -> f64 {
    let lt1 = lambda * tau + 1.0;
    m * (2.0 * tau * (2.0 - m) * snr - m * lt1) / (4.0 * tau * lt1)
}

/// Growth rate of the well-calibrated filter, `(SNR + lambda - sqrt(lambda (lambda + 2 SNR)))/2`.
pub fn well_specified_rate(p: &TrendModelParams) -> Result<f64, ParamError> {
    p.validate()?;
    let snr = p.snr();
    let l = p.lambda;
    // rationalized: the direct form cancels badly when SNR << lambda
    Ok(snr * snr / (2.0 * (snr + l + (l * (l + 2.0 * snr)).sqrt())))
}

/// Positivity threshold and best duration for a fixed leverage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurationSolution {
    /// `2 (2 - m) SNR > lambda m`, i.e. the rate can be made positive.
    pub feasible: bool,
    /// Durations above this earn a positive rate. `None` when infeasible.
    pub tau_min: Option<f64>,
    /// Rate-maximizing duration. `None` when infeasible (the optimum runs off to infinity).
    pub tau_opt: Option<f64>,
}

pub fn optimal_duration(p: &TrendModelParams, m: f64) -> Result<DurationSolution, ParamError> {
    p.validate()?;
    if !(m > 0.0 && m < 2.0) {
        return Err(ParamError::Invalid {
            name: "m",
            value: m,
            reason: "must lie in (0, 2)",
        });
    }
    let snr = p.snr();
    let l = p.lambda;
    let denom = 2.0 * (2.0 - m) * snr - l * m;
    // the rate numerator is tau * denom - m, so positivity needs denom > 0
    if !(denom > 0.0) {
        return Ok(DurationSolution {
            feasible: false,
            tau_min: None,
            tau_opt: None,
        });
    }
    let tau_min = m / denom;
    let tau_opt = (m + ((2.0 - m) * 2.0 * m * snr / l).sqrt()) / denom;
    Ok(DurationSolution {
        feasible: true,
        tau_min: Some(tau_min),
        tau_opt: Some(tau_opt),
    })
}
