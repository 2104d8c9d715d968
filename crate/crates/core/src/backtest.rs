//! Daily-reallocation backtests on close-price CSV files.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{CrossMaConfig, DAYS_PER_YEAR};
use crate::error::ParamError;
use crate::montecarlo::mean_var;
use crate::simulation::SimulatedPath;
use crate::strategies::{CrossMa, MarketView, MisspecifiedOptimal, Strategy, VarianceView};

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("expected header `date,close`, found `{found}`")]
    Header { found: String },
    #[error("line {line}: malformed row: {source}")]
    Row { line: u64, source: csv::Error },
    #[error("line {line}: bad date `{value}` (want YYYY-MM-DD)")]
    Date { line: u64, value: String },
    #[error("line {line}: bad close `{value}`")]
    Close { line: u64, value: String },
    #[error("line {line}: close must be positive, got {value}")]
    NonPositiveClose { line: u64, value: f64 },
    #[error("line {line}: date {date} is earlier than the previous row")]
    Unsorted { line: u64, date: NaiveDate },
    #[error("line {line}: duplicate date {date}")]
    DuplicateDate { line: u64, date: NaiveDate },
    #[error("sharpe ratio undefined: returns have zero dispersion")]
    SharpeUndefined,
    #[error("{strategy} strategy went bankrupt at row {index}")]
    Bankrupt { strategy: &'static str, index: usize },
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

/// Dated closes, one row per business day.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub name: String,
    pub dates: Vec<NaiveDate>,
    pub closes: Vec<f64>,
}

impl PriceSeries {
    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }

    /// Relative close-to-close returns `(S_{k+1} - S_k) / S_k`.
    pub fn daily_returns(&self) -> Vec<f64> {
        self.closes.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect()
    }

    /// Labels the prices of a simulated path with consecutive business days.
    pub fn from_path(name: &str, path: &SimulatedPath, start: NaiveDate) -> Self {
        Self {
            name: name.to_string(),
            dates: business_days(start, path.prices.len()),
            closes: path.prices.clone(),
        }
    }

    /// `date,close` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), BacktestError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "close"])?;
        for (d, c) in self.dates.iter().zip(&self.closes) {
            w.write_record([d.format("%Y-%m-%d").to_string(), format!("{c:.16e}")])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// `n` weekdays starting at `start` (moved forward to a weekday if needed).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

pub fn load_price_csv(path: &Path) -> Result<PriceSeries, BacktestError> {
    let file = File::open(path).map_err(|source| BacktestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_price_csv(file, &name)
}

pub fn read_price_csv<R: Read>(reader: R, name: &str) -> Result<PriceSeries, BacktestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(|source| BacktestError::Row { line: 1, source })?,
        None => return Err(BacktestError::Header { found: String::new() }),
    };
    let fields: Vec<&str> = header.iter().map(str::trim).collect();
    if fields != ["date", "close"] {
        return Err(BacktestError::Header {
            found: fields.join(","),
        });
    }
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut closes = Vec::new();
    for rec in records {
        let rec = rec.map_err(|source| BacktestError::Row {
            line: source.position().map_or(0, |p| p.line()),
            source,
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let raw_date = rec.get(0).unwrap_or("").trim();
        let raw_close = rec.get(1).unwrap_or("").trim();
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|_| BacktestError::Date {
            line,
            value: raw_date.to_string(),
        })?;
        let close: f64 = raw_close.parse().map_err(|_| BacktestError::Close {
            line,
            value: raw_close.to_string(),
        })?;
        if !close.is_finite() {
            return Err(BacktestError::Close {
                line,
                value: raw_close.to_string(),
            });
        }
        if close <= 0.0 {
            return Err(BacktestError::NonPositiveClose { line, value: close });
        }
        if let Some(&prev) = dates.last() {
            if date == prev {
                return Err(BacktestError::DuplicateDate { line, date });
            }
            if date < prev {
                return Err(BacktestError::Unsorted { line, date });
            }
        }
        dates.push(date);
        closes.push(close);
    }
    Ok(PriceSeries {
        name: name.to_string(),
        dates,
        closes,
    })
}

/// `mean / sd * sqrt(252)` of daily returns, sample standard deviation, zero rate.
pub fn annualized_sharpe(daily_returns: &[f64]) -> Result<f64, BacktestError> {
    if daily_returns.len() < 2 {
        return Err(ParamError::TooShort {
            len: daily_returns.len(),
            required: 2,
        }
        .into());
    }
    if daily_returns.iter().all(|&r| r == daily_returns[0]) {
        return Err(BacktestError::SharpeUndefined);
    }
    let (mean, var) = mean_var(daily_returns);
    if !(var > 0.0) {
        return Err(BacktestError::SharpeUndefined);
    }
    Ok(mean / var.sqrt() * DAYS_PER_YEAR.sqrt())
}

/// Window lengths and leverage of the two backtested strategies, in business days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestProtocol {
    pub tau_days: usize,
    pub m: f64,
    pub l1_days: usize,
    pub l2_days: usize,
    pub gamma: f64,
    pub alpha: f64,
}

impl Default for BacktestProtocol {
    fn default() -> Self {
        Self {
            tau_days: 252,
            m: 0.1,
            l1_days: 5,
            l2_days: 252,
            gamma: -1.0,
            alpha: 2.0,
        }
    }
}

/// Everything the run used, including the estimated volatility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestEcho {
    #[serde(flatten)]
    pub protocol: BacktestProtocol,
    /// Annualized full-sample volatility fed to the optimal strategy.
    pub sigma_s: f64,
    pub delta: f64,
    /// Row of the first return inside the common window.
    pub first_row: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub instrument: String,
    /// `None` when the strategy's returns have zero dispersion.
    pub sharpe_optimal: Option<f64>,
    pub sharpe_crossma: Option<f64>,
    pub n_days: usize,
    pub config: BacktestEcho,
    #[serde(skip)]
    pub returns_optimal: Vec<f64>,
    #[serde(skip)]
    pub returns_crossma: Vec<f64>,
}

fn sharpe_or_undefined(r: &[f64]) -> Result<Option<f64>, BacktestError> {
    match annualized_sharpe(r) {
        Ok(s) => Ok(Some(s)),
        Err(BacktestError::SharpeUndefined) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn run_backtest(
    series: &PriceSeries,
    protocol: &BacktestProtocol,
) -> Result<BacktestReport, BacktestError> {
    let required = protocol.l2_days.max(protocol.tau_days) + 2;
    if series.len() < required {
        return Err(ParamError::TooShort {
            len: series.len(),
            required,
        }
        .into());
    }
    let delta = 1.0 / DAYS_PER_YEAR;
    let daily = series.daily_returns();
    let (_, var) = mean_var(&daily);
    let sigma_s = (var * DAYS_PER_YEAR).sqrt();
    let returns: Vec<f64> = daily.iter().map(|r| r / delta).collect();
    let view = MarketView::new(
        &series.closes,
        &returns,
        VarianceView::Constant(sigma_s * sigma_s),
        delta,
    )?;

    let optimal = MisspecifiedOptimal::new(protocol.m, protocol.tau_days as f64 * delta)?;
    let crossma = CrossMa::new(CrossMaConfig::new(
        protocol.gamma,
        protocol.alpha,
        protocol.l1_days as f64 * delta,
        protocol.l2_days as f64 * delta,
    )?)?;
    let t1 = optimal.run(&view)?;
    let t2 = crossma.run(&view)?;
    for (name, t) in [(optimal.name(), &t1), (crossma.name(), &t2)] {
        if let Some(index) = t.bankrupt_at {
            return Err(BacktestError::Bankrupt {
                strategy: name,
                index,
            });
        }
    }
    let first_row = t2.start;
    let returns_optimal = t1.step_returns[first_row..].to_vec();
    let returns_crossma = t2.step_returns;
    Ok(BacktestReport {
        instrument: series.name.clone(),
        sharpe_optimal: sharpe_or_undefined(&returns_optimal)?,
        sharpe_crossma: sharpe_or_undefined(&returns_crossma)?,
        n_days: returns_crossma.len(),
        config: BacktestEcho {
            protocol: *protocol,
            sigma_s,
            delta,
            first_row,
        },
        returns_optimal,
        returns_crossma,
    })
}
