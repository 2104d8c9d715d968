//! Seedable path generators on a uniform grid.
//!
//! Trends use the exact OU transition; prices are advanced in log space so
//! they stay positive. Every generator is a pure function of its parameters,
//! grid and seed.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analytics::{TrendModelParams, DAYS_PER_YEAR};
use crate::error::{check_non_negative, check_positive, ParamError};

/// Random stream used by every generator.
pub type PathRng = ChaCha8Rng;

/// Stream for path `index` under `base_seed`.
///
/// ChaCha's 64-bit stream id selects an independent keystream, so path
/// `index` sees the same numbers whichever worker produces it.
pub fn path_rng(base_seed: u64, index: u64) -> PathRng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathGrid {
    pub delta: f64,
    pub n_steps: usize,
}

impl PathGrid {
    pub fn new(delta: f64, n_steps: usize) -> Result<Self, ParamError> {
        check_positive("delta", delta)?;
        if n_steps == 0 {
            return Err(ParamError::Invalid {
                name: "n_steps",
                value: 0.0,
                reason: "must be > 0",
            });
        }
        Ok(Self { delta, n_steps })
    }

    /// Daily grid (`delta = 1/252`) covering `years`.
    pub fn daily(years: f64) -> Result<Self, ParamError> {
        Self::with_horizon(1.0 / DAYS_PER_YEAR, years)
    }

    /// Grid of step `delta` whose horizon is `years`, which must be a whole
    /// number of steps.
    pub fn with_horizon(delta: f64, years: f64) -> Result<Self, ParamError> {
        check_positive("delta", delta)?;
        check_positive("horizon", years)?;
        let steps = (years / delta).round();
        if (steps * delta - years).abs() > 1e-9 * years.max(1.0) {
            return Err(ParamError::Invalid {
                name: "horizon",
                value: years,
                reason: "must be a multiple of the step size",
            });
        }
        Self::new(delta, steps as usize)
    }

    pub fn horizon(&self) -> f64 {
        self.delta * self.n_steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| k as f64 * self.delta).collect()
    }
}

/// Parameters of the trend alone, for models whose price volatility is not constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuTrend {
    pub lambda: f64,
    pub sigma_mu: f64,
}

impl OuTrend {
    pub fn new(lambda: f64, sigma_mu: f64) -> Result<Self, ParamError> {
        let t = Self { lambda, sigma_mu };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        check_positive("lambda", self.lambda)?;
        check_non_negative("sigma_mu", self.sigma_mu)
    }

    /// `(e^{-lambda delta}, sd of the exact-step innovation)`.
    fn transition(&self, delta: f64) -> (f64, f64) {
        let decay = (-self.lambda * delta).exp();
        let var = self.sigma_mu * self.sigma_mu * -(-2.0 * self.lambda * delta).exp_m1()
            / (2.0 * self.lambda);
        (decay, var.sqrt())
    }
}

impl From<TrendModelParams> for OuTrend {
    fn from(p: TrendModelParams) -> Self {
        Self {
            lambda: p.lambda,
            sigma_mu: p.sigma_mu,
        }
    }
}

/// Square-root variance process `dV = kappa (v_inf - V) dt + eps sqrt(V) dW^V`
/// with `d<W^S, W^V> = rho dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    pub kappa: f64,
    pub v_inf: f64,
    pub eps: f64,
    pub rho: f64,
    pub v0: f64,
}

impl HestonParams {
    /// Quarterly mean reversion around 30% volatility, 5% vol-of-vol, `rho = -0.6`.
    pub fn reference() -> Self {
        Self {
            kappa: 4.0,
            v_inf: 0.09,
            eps: 0.05,
            rho: -0.6,
            v0: 0.09,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        check_positive("kappa", self.kappa)?;
        check_positive("v_inf", self.v_inf)?;
        check_positive("eps", self.eps)?;
        check_positive("v0", self.v0)?;
        if !(self.rho.abs() <= 1.0) {
            return Err(ParamError::Invalid {
                name: "rho",
                value: self.rho,
                reason: "must lie in [-1, 1]",
            });
        }
        Ok(())
    }

    /// `2 kappa v_inf >= eps^2`. Full truncation keeps the scheme well
    /// defined either way; callers may warn when this fails.
    pub fn feller_satisfied(&self) -> bool {
        2.0 * self.kappa * self.v_inf >= self.eps * self.eps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    pub delta: f64,
    pub times: Vec<f64>,
    pub prices: Vec<f64>,
    pub trends: Vec<f64>,
    /// `y_{k+1} = (S_{k+1} - S_k) / (delta S_k)`; one shorter than `prices`.
    pub returns: Vec<f64>,
    /// Spot variance `V_k` (before truncation); `None` for constant volatility.
    pub variances: Option<Vec<f64>>,
}

impl SimulatedPath {
    pub fn n_steps(&self) -> usize {
        self.returns.len()
    }

    /// CSV `t,price,trend[,variance]` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        match &self.variances {
            Some(_) => writeln!(out, "t,price,trend,variance")?,
            None => writeln!(out, "t,price,trend")?,
        }
        for k in 0..self.prices.len() {
            write!(
                out,
                "{:.16e},{:.16e},{:.16e}",
                self.times[k], self.prices[k], self.trends[k]
            )?;
            if let Some(v) = &self.variances {
                write!(out, ",{:.16e}", v[k])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

pub fn simulate_ou_gbm(
    p: &TrendModelParams,
    grid: &PathGrid,
    seed: u64,
) -> Result<SimulatedPath, ParamError> {
    simulate_ou_gbm_with(p, grid, &mut path_rng(seed, 0))
}

pub fn simulate_ou_gbm_with(
    p: &TrendModelParams,
    grid: &PathGrid,
    rng: &mut PathRng,
) -> Result<SimulatedPath, ParamError> {
    p.validate()?;
    let grid = PathGrid::new(grid.delta, grid.n_steps)?;
    let delta = grid.delta;
    let n = grid.n_steps;
    let (decay, trend_sd) = OuTrend::from(*p).transition(delta);
    let price_sd = p.sigma_s * delta.sqrt();
    let drift_adj = 0.5 * p.sigma_s * p.sigma_s * delta;

    let mut prices = Vec::with_capacity(n + 1);
    let mut trends = Vec::with_capacity(n + 1);
    let mut returns = Vec::with_capacity(n);
    let mut log_s = 0.0;
    let mut mu = 0.0;
    prices.push(1.0);
    trends.push(0.0);
    for _ in 0..n {
        let xi_s: f64 = rng.sample(StandardNormal);
        let xi_mu: f64 = rng.sample(StandardNormal);
        let incr = mu * delta - drift_adj + price_sd * xi_s;
        log_s += incr;
        mu = decay * mu + trend_sd * xi_mu;
        prices.push(log_s.exp());
        trends.push(mu);
        returns.push(incr.exp_m1() / delta);
    }
    Ok(SimulatedPath {
        delta,
        times: grid.times(),
        prices,
        trends,
        returns,
        variances: None,
    })
}

pub fn simulate_heston(
    trend: &OuTrend,
    h: &HestonParams,
    grid: &PathGrid,
    seed: u64,
) -> Result<SimulatedPath, ParamError> {
    simulate_heston_with(trend, h, grid, &mut path_rng(seed, 0))
}

/// Full-truncation Euler scheme for the variance; the price shock uses
/// `sqrt(V_k^+)` and is correlated with the variance shock through `rho`.
pub fn simulate_heston_with(
    trend: &OuTrend,
    h: &HestonParams,
    grid: &PathGrid,
    rng: &mut PathRng,
) -> Result<SimulatedPath, ParamError> {
    trend.validate()?;
    h.validate()?;
    let grid = PathGrid::new(grid.delta, grid.n_steps)?;
    let delta = grid.delta;
    let n = grid.n_steps;
    let (decay, trend_sd) = trend.transition(delta);
    let sqrt_delta = delta.sqrt();
    let rho_perp = (1.0 - h.rho * h.rho).sqrt();

    let mut prices = Vec::with_capacity(n + 1);
    let mut trends = Vec::with_capacity(n + 1);
    let mut variances = Vec::with_capacity(n + 1);
    let mut returns = Vec::with_capacity(n);
    let mut log_s = 0.0;
    let mut mu = 0.0;
    let mut v = h.v0;
    prices.push(1.0);
    trends.push(0.0);
    variances.push(v);
    for _ in 0..n {
        let xi_s: f64 = rng.sample(StandardNormal);
        let xi_mu: f64 = rng.sample(StandardNormal);
        let xi_perp: f64 = rng.sample(StandardNormal);
        let xi_v = h.rho * xi_s + rho_perp * xi_perp;
        let v_plus = v.max(0.0);
        let incr = (mu - 0.5 * v_plus) * delta + (v_plus * delta).sqrt() * xi_s;
        log_s += incr;
        mu = decay * mu + trend_sd * xi_mu;
        v += h.kappa * (h.v_inf - v_plus) * delta + h.eps * v_plus.sqrt() * sqrt_delta * xi_v;
        prices.push(log_s.exp());
        trends.push(mu);
        variances.push(v);
        returns.push(incr.exp_m1() / delta);
    }
    Ok(SimulatedPath {
        delta,
        times: grid.times(),
        prices,
        trends,
        returns,
        variances: Some(variances),
    })
}

/// Which price model drives a Monte Carlo experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelConfig {
    OuGbm {
        params: TrendModelParams,
    },
    Heston {
        trend: OuTrend,
        heston: HestonParams,
    },
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ParamError> {
        match self {
            Self::OuGbm { params } => params.validate(),
            Self::Heston { trend, heston } => {
                trend.validate()?;
                heston.validate()
            }
        }
    }

    pub fn simulate(&self, grid: &PathGrid, rng: &mut PathRng) -> Result<SimulatedPath, ParamError> {
        match self {
            Self::OuGbm { params } => simulate_ou_gbm_with(params, grid, rng),
            Self::Heston { trend, heston } => simulate_heston_with(trend, heston, grid, rng),
        }
    }

    /// Constant price variance, when the model has one.
    pub fn constant_variance(&self) -> Option<f64> {
        match self {
            Self::OuGbm { params } => Some(params.sigma_s * params.sigma_s),
            Self::Heston { .. } => None,
        }
    }
}
