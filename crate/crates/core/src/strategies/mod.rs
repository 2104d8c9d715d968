//! Self-financing strategies on a single risky asset and the wealth engine
//! that runs them.

mod crossma;
mod gma;
mod optimal;
mod registry;

use std::fmt::Debug;
use std::io::{self, Write};

use serde::Serialize;

use crate::error::{check_positive, ParamError};
use crate::simulation::SimulatedPath;

pub use crossma::CrossMa;
pub use gma::{geometric_ma, log_moving_average, GmaState};
pub use optimal::{KalmanOptimal, MisspecifiedOptimal};
pub use registry::{StrategyBuilder, StrategyParams, StrategyRegistry, StrategySpec};

/// Spot variances at or below this are floored before dividing by them.
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Price variance seen by a strategy.
#[derive(Debug, Clone, Copy)]
pub enum VarianceView<'a> {
    Constant(f64),
    /// `V_k` at every grid point, one entry per price.
    Path(&'a [f64]),
}

/// Everything a strategy may observe about one price path.
#[derive(Debug, Clone, Copy)]
pub struct MarketView<'a> {
    pub prices: &'a [f64],
    /// `returns[k] = (S_{k+1} - S_k) / (delta S_k)`.
    pub returns: &'a [f64],
    pub variance: VarianceView<'a>,
    pub delta: f64,
}

impl<'a> MarketView<'a> {
    pub fn new(
        prices: &'a [f64],
        returns: &'a [f64],
        variance: VarianceView<'a>,
        delta: f64,
    ) -> Result<Self, ParamError> {
        check_positive("delta", delta)?;
        if prices.len() != returns.len() + 1 {
            return Err(ParamError::LengthMismatch {
                left: prices.len(),
                right: returns.len() + 1,
            });
        }
        match variance {
            VarianceView::Constant(v) => check_positive("variance", v)?,
            VarianceView::Path(v) if v.len() != prices.len() => {
                return Err(ParamError::LengthMismatch {
                    left: v.len(),
                    right: prices.len(),
                })
            }
            VarianceView::Path(_) => {}
        }
        Ok(Self {
            prices,
            returns,
            variance,
            delta,
        })
    }

    /// View of a simulated path. Constant-volatility paths need `sigma_s_sq`.
    pub fn from_path(path: &'a SimulatedPath, sigma_s_sq: Option<f64>) -> Result<Self, ParamError> {
        let variance = match (&path.variances, sigma_s_sq) {
            (Some(v), _) => VarianceView::Path(v),
            (None, Some(s)) => VarianceView::Constant(s),
            (None, None) => {
                return Err(ParamError::Invalid {
                    name: "variance",
                    value: f64::NAN,
                    reason: "constant-volatility path needs sigma_s^2",
                })
            }
        };
        Self::new(&path.prices, &path.returns, variance, path.delta)
    }

    pub fn n_steps(&self) -> usize {
        self.returns.len()
    }

    /// Variance usable at step `k`, floored at [`VARIANCE_FLOOR`].
    pub fn variance_at(&self, k: usize) -> f64 {
        match self.variance {
            VarianceView::Constant(v) => v,
            VarianceView::Path(v) => v[k].max(VARIANCE_FLOOR),
        }
    }

    pub fn variances(&self) -> Vec<f64> {
        (0..self.n_steps()).map(|k| self.variance_at(k)).collect()
    }
}

/// Wealth of a strategy started with unit capital at grid index `start`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WealthTrack {
    pub start: usize,
    pub delta: f64,
    /// `ln(P_k / P_start)`; first entry is 0.
    pub log_wealth: Vec<f64>,
    /// Allocation held over `[k, k+1]` for `k = start, start+1, ...`.
    pub allocations: Vec<f64>,
    /// Relative wealth change of each step, `allocation * y * delta`.
    pub step_returns: Vec<f64>,
    /// Grid index of the step on which wealth hit zero or below.
    pub bankrupt_at: Option<usize>,
}

impl WealthTrack {
    pub fn is_bankrupt(&self) -> bool {
        self.bankrupt_at.is_some()
    }

    /// Active horizon in years.
    pub fn horizon(&self) -> f64 {
        self.allocations.len() as f64 * self.delta
    }

    /// `ln(P_T / P_start) / (T - t_start)`, `None` on bankruptcy or an empty run.
    pub fn annualized_log_return(&self) -> Option<f64> {
        if self.is_bankrupt() || self.allocations.is_empty() {
            return None;
        }
        self.log_wealth.last().map(|lw| lw / self.horizon())
    }

    /// CSV `t,log_wealth,allocation`; the final row has an empty allocation.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,log_wealth,allocation")?;
        for (i, lw) in self.log_wealth.iter().enumerate() {
            let t = (self.start + i) as f64 * self.delta;
            match self.allocations.get(i) {
                Some(a) => writeln!(out, "{t:.16e},{lw:.16e},{a:.16e}")?,
                None => writeln!(out, "{t:.16e},{lw:.16e},")?,
            }
        }
        Ok(())
    }
}

/// Compound `P_{k+1} = P_k (1 + allocation_k y_k delta)` from `start`.
///
/// `allocation(k)` is called once per step, in order, and may only look at
/// information up to index `k`.
pub fn run_wealth<F>(market: &MarketView, start: usize, mut allocation: F) -> WealthTrack
where
    F: FnMut(usize) -> f64,
{
    let n = market.n_steps();
    let len = n.saturating_sub(start);
    let mut track = WealthTrack {
        start,
        delta: market.delta,
        log_wealth: Vec::with_capacity(len + 1),
        allocations: Vec::with_capacity(len),
        step_returns: Vec::with_capacity(len),
        bankrupt_at: None,
    };
    track.log_wealth.push(0.0);
    let mut lw = 0.0;
    for k in start..n {
        let a = allocation(k);
        let r = a * market.returns[k] * market.delta;
        track.allocations.push(a);
        track.step_returns.push(r);
        if !(1.0 + r > 0.0) {
            track.bankrupt_at = Some(k);
            break;
        }
        lw += r.ln_1p();
        track.log_wealth.push(lw);
    }
    track
}

/// A trading rule that turns observed prices into a wealth track.
pub trait Strategy: Debug + Send + Sync {
    /// Registry name.
    fn name(&self) -> &'static str;

    /// Parameters as registered, for echoing in reports.
    fn params(&self) -> StrategyParams;

    fn run(&self, market: &MarketView) -> Result<WealthTrack, ParamError>;
}
