//! Closed-form evaluators for the OU-trend model.
//!
//! The risky asset follows `dS/S = mu dt + sigma_s dW^S` with an unobserved
//! trend `d mu = -lambda mu dt + sigma_mu dW^mu`, `mu_0 = 0`. Everything in
//! this module is a pure function of its arguments; durations are in years
//! and rates are annualized expected log-returns.

mod crossma;
mod filter_variance;
mod misspecified;
mod normal;

pub use crossma::{crossma_moments, crossma_rate, single_ma_rate, CrossMaConfig, CrossMaMoments};
pub use filter_variance::{filter_variance, stationary_filter_variance, FilterVariance};
pub use misspecified::{
    misspecified_rate, optimal_duration, well_specified_rate, DurationSolution,
    OptimalStrategyConfig,
};
pub use normal::{std_normal_cdf, std_normal_pdf};

use serde::{Deserialize, Serialize};

use crate::error::{check_non_negative, check_positive, ParamError};

/// Trading days per year used for every day/year conversion.
pub const DAYS_PER_YEAR: f64 = 252.0;

/// True parameters of the OU-trend model.
///
/// `sigma_mu = 0` is accepted: every closed form is continuous there and the
/// rate sweeps start at zero trend volatility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendModelParams {
    pub lambda: f64,
    pub sigma_mu: f64,
    pub sigma_s: f64,
}

impl TrendModelParams {
    pub fn new(lambda: f64, sigma_mu: f64, sigma_s: f64) -> Result<Self, ParamError> {
        let p = Self {
            lambda,
            sigma_mu,
            sigma_s,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters hitting a target signal-to-noise ratio.
    pub fn from_snr(lambda: f64, snr: f64, sigma_s: f64) -> Result<Self, ParamError> {
        check_positive("lambda", lambda)?;
        check_non_negative("snr", snr)?;
        Self::new(lambda, (2.0 * lambda * snr).sqrt() * sigma_s, sigma_s)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        check_positive("lambda", self.lambda)?;
        check_non_negative("sigma_mu", self.sigma_mu)?;
        check_positive("sigma_s", self.sigma_s)
    }

    /// `sigma_mu^2 / (2 lambda sigma_s^2)`.
    pub fn snr(&self) -> f64 {
        self.sigma_mu * self.sigma_mu / (2.0 * self.lambda * self.sigma_s * self.sigma_s)
    }

    /// Stationary variance of the trend, `sigma_mu^2 / (2 lambda)`.
    pub fn stationary_trend_variance(&self) -> f64 {
        self.sigma_mu * self.sigma_mu / (2.0 * self.lambda)
    }
}

/// Steady-state Kalman quantities implied by a [`TrendModelParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub beta: f64,
    pub snr: f64,
    pub tau_star: f64,
    pub m_star: f64,
}

/// `beta`, SNR, the Kalman duration `tau* = 1/(lambda beta)` and the
/// correction factor `m* = (beta - 1)/beta`.
pub fn derived_quantities(p: &TrendModelParams) -> Result<DerivedQuantities, ParamError> {
    p.validate()?;
    let x = p.sigma_mu * p.sigma_mu / (p.lambda * p.lambda * p.sigma_s * p.sigma_s);
    let beta = (1.0 + x).sqrt();
    // beta - 1 = x / (beta + 1), exact for small x
    let m_star = x / ((beta + 1.0) * beta);
    Ok(DerivedQuantities {
        beta,
        snr: p.snr(),
        tau_star: 1.0 / (p.lambda * beta),
        m_star,
    })
}

/// Years to whole grid steps, rounding to nearest.
pub fn years_to_steps(years: f64, delta: f64) -> usize {
    (years / delta).round().max(0.0) as usize
}

pub fn days_to_years(days: f64) -> f64 {
    days / DAYS_PER_YEAR
}
