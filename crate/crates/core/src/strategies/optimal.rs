use super::{run_wealth, MarketView, Strategy, StrategyParams, WealthTrack};
use crate::analytics::OptimalStrategyConfig;
use crate::error::ParamError;
use crate::filters::{discrete_kalman_run, ema_run, KalmanConfig};

/// `omega_k = m mu~_k / sigma^2`, with `mu~` an EMA of returns of duration `tau`.
///
/// Under a stochastic variance the current spot `V_k` replaces `sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MisspecifiedOptimal {
    pub config: OptimalStrategyConfig,
}

impl MisspecifiedOptimal {
    pub fn new(m: f64, tau: f64) -> Result<Self, ParamError> {
        Ok(Self {
            config: OptimalStrategyConfig::new(m, tau)?,
        })
    }
}

impl Strategy for MisspecifiedOptimal {
    fn name(&self) -> &'static str {
        "optimal"
    }

    fn params(&self) -> StrategyParams {
        StrategyParams::from_pairs(&[("m", self.config.m), ("tau", self.config.tau)])
    }

    fn run(&self, market: &MarketView) -> Result<WealthTrack, ParamError> {
        let est = ema_run(market.returns, self.config.tau, market.delta)?;
        let m = self.config.m;
        Ok(run_wealth(market, 0, |k| {
            // estimate available at time k, before returns[k] is realized
            let mu = if k == 0 { 0.0 } else { est[k - 1] };
            m * mu / market.variance_at(k)
        }))
    }
}

/// `omega_k = mu^_k / V_k` with `mu^` from a Kalman filter that believes
/// the trend follows an OU process with the agent's parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanOptimal {
    pub agent: KalmanConfig,
}

impl KalmanOptimal {
    pub fn new(agent: KalmanConfig) -> Result<Self, ParamError> {
        agent.validate()?;
        Ok(Self { agent })
    }
}

impl Strategy for KalmanOptimal {
    fn name(&self) -> &'static str {
        "kalman"
    }

    fn params(&self) -> StrategyParams {
        let mut p = StrategyParams::from_pairs(&[
            ("lambda_a", self.agent.lambda),
            ("sigma_mu_a", self.agent.sigma_mu),
        ]);
        if let Some(v) = self.agent.prior_var {
            p.insert("prior_var", v);
        }
        p
    }

    fn run(&self, market: &MarketView) -> Result<WealthTrack, ParamError> {
        let variances = market.variances();
        let track = discrete_kalman_run(market.returns, &variances, &self.agent, market.delta)?;
        let est = track.estimates;
        Ok(run_wealth(market, 0, |k| {
            let mu = if k == 0 { 0.0 } else { est[k - 1] };
            mu / variances[k]
        }))
    }
}
