use serde::{Deserialize, Serialize};

use super::normal::{std_normal_cdf, std_normal_pdf};
use super::TrendModelParams;
use crate::error::{check_finite, check_non_negative, check_positive, ParamError};

/// Allocation `gamma + alpha * 1{G(t, l1) > G(t, l2)}` on geometric moving
/// averages of windows `l1 < l2` (years). `l1 = 0` is the single-average rule
/// comparing the price itself to `G(t, l2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossMaConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub l1: f64,
    pub l2: f64,
}

impl CrossMaConfig {
    pub fn new(gamma: f64, alpha: f64, l1: f64, l2: f64) -> Result<Self, ParamError> {
        let c = Self {
            gamma,
            alpha,
            l1,
            l2,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        check_finite("gamma", self.gamma)?;
        check_finite("alpha", self.alpha)?;
        check_non_negative("l1", self.l1)?;
        check_positive("l2", self.l2)?;
        if self.l1 >= self.l2 {
            return Err(ParamError::Invalid {
                name: "l1",
                value: self.l1,
                reason: "must be strictly below l2",
            });
        }
        Ok(())
    }
}

/// Stationary moments of `X_t = mean log-price over l1 - mean log-price over l2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossMaMoments {
    pub mean_gap: f64,
    pub asym_var: f64,
    pub cov_limit: f64,
}

pub fn crossma_moments(
    p: &TrendModelParams,
    c: &CrossMaConfig,
) -> Result<CrossMaMoments, ParamError> {
    p.validate()?;
    c.validate()?;
    if c.l1 <= 0.0 {
        return Err(ParamError::Invalid {
            name: "l1",
            value: c.l1,
            reason: "must be > 0 (use the single moving-average rate for l1 = 0)",
        });
    }
    let (l1, l2) = (c.l1, c.l2);
    let lambda = p.lambda;
    let smu2 = p.sigma_mu * p.sigma_mu;
    let ss2 = p.sigma_s * p.sigma_s;
    let a = lambda * l1;
    let b = lambda * l2;

    let mean_gap = -ss2 * (l2 - l1) / 4.0;
    let asym_var = (smu2 / (lambda * lambda) + ss2) * (l2 - l1) * (l2 - l1) / (3.0 * l2)
        + smu2 / lambda.powi(3) * trend_kernel(a, b);
    let cov_limit = smu2 / (2.0 * lambda * lambda) * (one_minus_exp_over(a) - one_minus_exp_over(b));
    Ok(CrossMaMoments {
        mean_gap,
        asym_var,
        cov_limit,
    })
}

/// Asymptotic expected log-return of the cross moving-average allocation.
///
/// Delegates to [`single_ma_rate`] when `l1 = 0`.
pub fn crossma_rate(p: &TrendModelParams, c: &CrossMaConfig) -> Result<f64, ParamError> {
    c.validate()?;
    if c.l1 == 0.0 {
        return single_ma_rate(p, c.gamma, c.alpha, c.l2);
    }
    let mo = crossma_moments(p, c)?;
    Ok(assemble_rate(p, c.gamma, c.alpha, &mo))
}

/// Asymptotic expected log-return of `gamma + alpha * 1{S_t > G(t, l)}`.
pub fn single_ma_rate(
    p: &TrendModelParams,
    gamma: f64,
    alpha: f64,
    l: f64,
) -> Result<f64, ParamError> {
    p.validate()?;
    check_finite("gamma", gamma)?;
    check_finite("alpha", alpha)?;
    check_positive("l", l)?;
    let lambda = p.lambda;
    let smu2 = p.sigma_mu * p.sigma_mu;
    let ss2 = p.sigma_s * p.sigma_s;
    let b = lambda * l;
    let mo = CrossMaMoments {
        mean_gap: -ss2 * l / 4.0,
        asym_var: (smu2 / (lambda * lambda) + ss2) * l / 3.0
            + smu2 / lambda.powi(3) * single_trend_kernel(b),
        cov_limit: smu2 / (2.0 * lambda * lambda) * (1.0 - one_minus_exp_over(b)),
    };
    Ok(assemble_rate(p, gamma, alpha, &mo))
}

fn assemble_rate(p: &TrendModelParams, gamma: f64, alpha: f64, mo: &CrossMaMoments) -> f64 {
    let ss2 = p.sigma_s * p.sigma_s;
    let sd = mo.asym_var.sqrt();
    let z = mo.mean_gap / sd;
    let mut rate = -gamma * gamma * ss2 / 2.0
        - (alpha * alpha + 2.0 * alpha * gamma) * ss2 / 2.0 * std_normal_cdf(z);
    if mo.cov_limit != 0.0 {
        rate += alpha * mo.cov_limit / sd * std_normal_pdf(-z);
    }
    rate
}

/// Below this argument the cancelling kernels are summed as power series.
const SERIES_SWITCH: f64 = 0.5;

/// `(1 - e^{-x}) / x`, equal to 1 at 0.
fn one_minus_exp_over(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// `(1 - x - e^{-x}) / x^2`.
fn curvature_term(x: f64) -> f64 {
    if x < SERIES_SWITCH {
        // -sum_{n>=2} (-x)^{n-2} / n!
        let mut term = -0.5;
        let mut acc = term;
        for n in 3..=20 {
            term *= -x / n as f64;
            acc += term;
        }
        acc
    } else {
        (-(-x).exp_m1() - x) / (x * x)
    }
}

/// Trend part of the stationary `Var[X]` in units of `sigma_mu^2 / lambda^3`,
/// for `a = lambda l1`, `b = lambda l2`.
fn trend_kernel(a: f64, b: f64) -> f64 {
    let qa = one_minus_exp_over(a);
    let eb = (-b).exp();
    let sinhc = if a == 0.0 { 1.0 } else { a.sinh() / a };
    curvature_term(a) + (1.0 - eb) / (b * b) + 1.0 / b
        - (qa * (1.0 - eb) + 2.0 * eb * sinhc) / b
}

/// `trend_kernel(0, b)`, i.e. `-1/2 + (1 - e^{-b}(1 + b)) / b^2`.
fn single_trend_kernel(b: f64) -> f64 {
    if b < SERIES_SWITCH {
        // sum_{n>=3} (-1)^n (n-1) b^{n-2} / n!
        let mut pow_fact = 1.0 / 2.0;
        let mut acc = 0.0;
        for n in 3..=20 {
            pow_fact *= -b / n as f64;
            acc += (n - 1) as f64 * pow_fact;
        }
        acc
    } else {
        -0.5 + (-(-b).exp_m1() - b * (-b).exp()) / (b * b)
    }
}
