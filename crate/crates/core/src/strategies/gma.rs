use crate::error::{check_positive, ParamError};

/// Rolling sum of log prices over a fixed window.
///
/// Logs are taken relative to a reference price, so a flat series sums to
/// exactly zero.
#[derive(Debug, Clone)]
pub struct GmaState {
    window: usize,
    reference: f64,
    sum: f64,
    buf: Vec<f64>,
    pushed: usize,
}

impl GmaState {
    pub fn new(window: usize, reference: f64) -> Result<Self, ParamError> {
        if window == 0 {
            return Err(ParamError::Invalid {
                name: "window",
                value: 0.0,
                reason: "must be at least one step",
            });
        }
        check_positive("reference price", reference)?;
        Ok(Self {
            window,
            reference,
            sum: 0.0,
            buf: vec![0.0; window],
            pushed: 0,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn push(&mut self, price: f64) {
        let x = (price / self.reference).ln();
        let slot = self.pushed % self.window;
        self.sum += x - self.buf[slot];
        self.buf[slot] = x;
        self.pushed += 1;
    }

    pub fn is_full(&self) -> bool {
        self.pushed >= self.window
    }

    /// Mean of `ln(S_j / reference)` over the window, once full.
    pub fn mean_log(&self) -> Option<f64> {
        self.is_full().then(|| self.sum / self.window as f64)
    }

    pub fn value(&self) -> Option<f64> {
        self.mean_log().map(|m| self.reference * m.exp())
    }
}

/// `(1/L) sum_{j=k-L+1..k} ln(S_j / S_0)` for `k = L-1 ..`.
pub fn log_moving_average(prices: &[f64], window: usize) -> Result<Vec<f64>, ParamError> {
    if prices.len() < window {
        return Err(ParamError::TooShort {
            len: prices.len(),
            required: window,
        });
    }
    let mut g = GmaState::new(window, *prices.first().unwrap_or(&1.0))?;
    let mut out = Vec::with_capacity(prices.len() + 1 - window);
    for &p in prices {
        check_positive("price", p)?;
        g.push(p);
        if let Some(m) = g.mean_log() {
            out.push(m);
        }
    }
    Ok(out)
}

/// Discrete geometric moving average `exp(mean of the last L log prices)`.
///
/// Element `i` of the output corresponds to price index `i + window - 1`.
pub fn geometric_ma(prices: &[f64], window: usize) -> Result<Vec<f64>, ParamError> {
    let s0 = *prices.first().unwrap_or(&1.0);
    Ok(log_moving_average(prices, window)?
        .into_iter()
        .map(|m| s0 * m.exp())
        .collect())
}
