//! Trend estimators fed with per-step returns `y_k`.

use serde::{Deserialize, Serialize};

use crate::analytics::{derived_quantities, TrendModelParams};
use crate::error::{check_non_negative, check_positive, ParamError};

/// Exponential moving average of returns with duration `tau`:
/// `mu~_{k+1} = mu~_k + (delta/tau)(y_{k+1} - mu~_k)`, `mu~_0 = 0`.
///
/// Element `k` of the output is the estimate after consuming `returns[k]`.
pub fn ema_run(returns: &[f64], tau: f64, delta: f64) -> Result<Vec<f64>, ParamError> {
    check_positive("tau", tau)?;
    check_positive("delta", delta)?;
    if delta >= tau {
        return Err(ParamError::Invalid {
            name: "delta",
            value: delta,
            reason: "must be smaller than tau for a stable recursion",
        });
    }
    let gain = delta / tau;
    let mut est = 0.0;
    Ok(returns
        .iter()
        .map(|&y| {
            est += gain * (y - est);
            est
        })
        .collect())
}

/// Steady-state Kalman filter as a corrected EMA: `m* * EMA(tau*)`.
pub fn steady_state_kalman_run(
    returns: &[f64],
    p: &TrendModelParams,
    delta: f64,
) -> Result<Vec<f64>, ParamError> {
    let d = derived_quantities(p)?;
    let mut est = ema_run(returns, d.tau_star, delta)?;
    for e in &mut est {
        *e *= d.m_star;
    }
    Ok(est)
}

/// Estimate and error variance of a scalar Kalman filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    pub estimate: f64,
    pub error_var: f64,
}

/// Filtered means and error variances, one per consumed return.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanTrack {
    pub estimates: Vec<f64>,
    pub error_vars: Vec<f64>,
    pub gains: Vec<f64>,
}

/// The agent's (possibly wrong) belief about the trend dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanConfig {
    pub lambda: f64,
    pub sigma_mu: f64,
    /// Prior error variance; defaults to the believed stationary trend variance.
    pub prior_var: Option<f64>,
}

impl KalmanConfig {
    pub fn new(lambda: f64, sigma_mu: f64) -> Result<Self, ParamError> {
        let c = Self {
            lambda,
            sigma_mu,
            prior_var: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        check_positive("lambda_a", self.lambda)?;
        check_non_negative("sigma_mu_a", self.sigma_mu)?;
        if let Some(v) = self.prior_var {
            check_non_negative("prior_var", v)?;
        }
        Ok(())
    }

    pub fn initial_state(&self) -> FilterState {
        FilterState {
            estimate: 0.0,
            error_var: self
                .prior_var
                .unwrap_or(self.sigma_mu * self.sigma_mu / (2.0 * self.lambda)),
        }
    }

    /// `(transition, process noise variance)` of the exact OU step.
    pub fn transition(&self, delta: f64) -> (f64, f64) {
        let a = (-self.lambda * delta).exp();
        let q = self.sigma_mu * self.sigma_mu * -(-2.0 * self.lambda * delta).exp_m1()
            / (2.0 * self.lambda);
        (a, q)
    }
}

/// One predict/update cycle. `obs_var` is the variance of the return noise,
/// `V_k / delta`.
pub fn kalman_step(
    state: FilterState,
    y: f64,
    obs_var: f64,
    transition: f64,
    process_var: f64,
) -> (FilterState, f64) {
    let prior_mean = transition * state.estimate;
    let prior_var = transition * transition * state.error_var + process_var;
    let gain = prior_var / (prior_var + obs_var);
    (
        FilterState {
            estimate: prior_mean + gain * (y - prior_mean),
            error_var: (1.0 - gain) * prior_var,
        },
        gain,
    )
}

/// Non-stationary scalar Kalman filter on
/// `mu_{k+1} = e^{-lambda delta} mu_k + v_k`, `y_{k+1} = mu_{k+1} + u_{k+1}`
/// with `Var[u_{k+1}] = V_k / delta`.
///
/// `variances[k]` is the spot variance observed when `returns[k]` is realized.
pub fn discrete_kalman_run(
    returns: &[f64],
    variances: &[f64],
    agent: &KalmanConfig,
    delta: f64,
) -> Result<KalmanTrack, ParamError> {
    agent.validate()?;
    check_positive("delta", delta)?;
    if returns.len() != variances.len() {
        return Err(ParamError::LengthMismatch {
            left: returns.len(),
            right: variances.len(),
        });
    }
    let (a, q) = agent.transition(delta);
    let mut state = agent.initial_state();
    let n = returns.len();
    let mut track = KalmanTrack {
        estimates: Vec::with_capacity(n),
        error_vars: Vec::with_capacity(n),
        gains: Vec::with_capacity(n),
    };
    for (&y, &v) in returns.iter().zip(variances) {
        check_positive("observation variance", v)?;
        let (next, gain) = kalman_step(state, y, v / delta, a, q);
        state = next;
        track.estimates.push(state.estimate);
        track.error_vars.push(state.error_var);
        track.gains.push(gain);
    }
    Ok(track)
}

/// Fixed-point gain of [`discrete_kalman_run`] under a constant spot variance.
pub fn steady_state_gain(agent: &KalmanConfig, variance: f64, delta: f64) -> Result<f64, ParamError> {
    agent.validate()?;
    check_positive("variance", variance)?;
    check_positive("delta", delta)?;
    let (a, q) = agent.transition(delta);
    let r = variance / delta;
    // prior variance x solves x^2 + x (r (1 - a^2) - q) - q r = 0
    let b = r * (1.0 - a * a) - q;
    let x = if b >= 0.0 {
        2.0 * q * r / (b + (b * b + 4.0 * q * r).sqrt())
    } else {
        (-b + (b * b + 4.0 * q * r).sqrt()) / 2.0
    };
    Ok(x / (x + r))
}
