use super::gma::GmaState;
use super::{run_wealth, MarketView, Strategy, StrategyParams, WealthTrack};
use crate::analytics::CrossMaConfig;
use crate::error::ParamError;

/// `theta_k = gamma + alpha 1{G(k, L1) > G(k, L2)}` on geometric moving
/// averages of the last `L1` and `L2` prices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossMa {
    pub config: CrossMaConfig,
}

impl CrossMa {
    pub fn new(config: CrossMaConfig) -> Result<Self, ParamError> {
        config.validate()?;
        Ok(Self { config })
    }

    /// Window lengths in steps. The short window is at least one price.
    pub fn windows(&self, delta: f64) -> Result<(usize, usize), ParamError> {
        let short = ((self.config.l1 / delta).round() as usize).max(1);
        let long = (self.config.l2 / delta).round() as usize;
        if long <= short {
            return Err(ParamError::Invalid {
                name: "l2",
                value: self.config.l2,
                reason: "long window must span more steps than the short one",
            });
        }
        Ok((short, long))
    }
}

impl Strategy for CrossMa {
    fn name(&self) -> &'static str {
        "crossma"
    }

    fn params(&self) -> StrategyParams {
        let c = &self.config;
        StrategyParams::from_pairs(&[("gamma", c.gamma), ("alpha", c.alpha), ("l1", c.l1), ("l2", c.l2)])
    }

    fn run(&self, market: &MarketView) -> Result<WealthTrack, ParamError> {
        let (short, long) = self.windows(market.delta)?;
        let prices = market.prices;
        if prices.len() <= long {
            return Err(ParamError::TooShort {
                len: prices.len(),
                required: long + 1,
            });
        }
        let s0 = prices[0];
        let mut g1 = GmaState::new(short, s0)?;
        let mut g2 = GmaState::new(long, s0)?;
        for &p in &prices[..long - 1] {
            g1.push(p);
            g2.push(p);
        }
        let (gamma, alpha) = (self.config.gamma, self.config.alpha);
        Ok(run_wealth(market, long - 1, |k| {
            g1.push(prices[k]);
            g2.push(prices[k]);
            match (g1.mean_log(), g2.mean_log()) {
                (Some(a), Some(b)) if a > b => gamma + alpha,
                _ => gamma,
            }
        }))
    }
}
