use std::path::PathBuf;
use std::str::FromStr;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "trendlab", version, about = "Trend-following analytics, simulation and backtests")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Write results here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a single closed-form quantity.
    Analytic(AnalyticArgs),
    /// Kalman and mis-specified optimal durations over a (lambda, SNR) grid, as CSV.
    SweepDurations(SweepDurationsArgs),
    /// Asymptotic rates of both strategies over a sigma_mu grid, as CSV.
    SweepRates(SweepRatesArgs),
    /// Simulate one path and dump it as CSV.
    Simulate(SimulateArgs),
    /// Monte Carlo estimate of a strategy's annualized log-return, as JSON.
    Mc(McArgs),
    /// Sharpe ratios of both strategies on a `date,close` CSV, as JSON.
    Backtest(BacktestArgs),
}

/// A grid given as `start:end:n` (inclusive, n points) or a comma list.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Range { start: f64, end: f64, n: usize },
    List(Vec<f64>),
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{t}` is not a number"))
        };
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [a, b, n] = parts[..] else {
                return Err(format!("range `{s}` must look like start:end:n"));
            };
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| format!("`{n}` is not a point count"))?;
            if n == 0 {
                return Err("a range needs at least one point".into());
            }
            Ok(Grid::Range {
                start: num(a)?,
                end: num(b)?,
                n,
            })
        } else {
            let xs = s.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
            Ok(Grid::List(xs))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    OuGbm,
    Heston,
}

/// Trend model; give either `--sigma-mu` or `--snr`.
#[derive(Debug, Clone, Args)]
pub struct TrendArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, conflicts_with = "snr")]
    pub sigma_mu: Option<f64>,
    /// Signal-to-noise ratio, sigma_mu^2 / (2 lambda sigma_s^2).
    #[arg(long)]
    pub snr: Option<f64>,
    #[arg(long)]
    pub sigma_s: Option<f64>,
}

#[derive(Debug, Args)]
#[command(group(
    ArgGroup::new("mode")
        .required(true)
        .args(["misspecified", "well_specified", "derived", "crossma", "single_ma", "duration", "filter_variance"])
))]
pub struct AnalyticArgs {
    /// Rate of the optimal strategy with leverage m and EMA duration tau.
    #[arg(long)]
    pub misspecified: bool,
    /// Rate of the Kalman strategy with the true parameters.
    #[arg(long)]
    pub well_specified: bool,
    /// beta, SNR, tau* and m*, as JSON.
    #[arg(long)]
    pub derived: bool,
    /// Rate of the cross moving-average strategy.
    #[arg(long)]
    pub crossma: bool,
    /// Rate of `gamma + alpha 1{S > G(l2)}`; the window is read from the l2 flags.
    #[arg(long)]
    pub single_ma: bool,
    /// tau_min and tau_opt for leverage m, as JSON. Exit code 4 when infeasible.
    #[arg(long)]
    pub duration: bool,
    /// Variance of the EMA trend estimate at time t.
    #[arg(long)]
    pub filter_variance: bool,

    #[command(flatten)]
    pub trend: TrendArgs,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long, conflicts_with = "tau_years")]
    pub tau_days: Option<f64>,
    #[arg(long, visible_alias = "tau")]
    pub tau_years: Option<f64>,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub gamma: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, conflicts_with = "l1_years")]
    pub l1_days: Option<f64>,
    #[arg(long, visible_alias = "l1")]
    pub l1_years: Option<f64>,
    #[arg(long, conflicts_with = "l2_years")]
    pub l2_days: Option<f64>,
    #[arg(long, visible_alias = "l2")]
    pub l2_years: Option<f64>,
    /// Evaluation time for --filter-variance; stationary limit when absent.
    #[arg(long)]
    pub t_years: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepDurationsArgs {
    #[arg(long, default_value = "0.1:5:50")]
    pub lambda: Grid,
    #[arg(long, default_value = "0.5,1")]
    pub snr: Grid,
    /// Leverage for the mis-specified durations.
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
}

#[derive(Debug, Args)]
pub struct SweepRatesArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.3)]
    pub sigma_s: f64,
    #[arg(long, default_value = "0:1:21")]
    pub sigma_mu: Grid,
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    #[arg(long, conflicts_with = "tau_years")]
    pub tau_days: Option<f64>,
    #[arg(long, visible_alias = "tau")]
    pub tau_years: Option<f64>,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub gamma: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, conflicts_with = "l1_years")]
    pub l1_days: Option<f64>,
    #[arg(long, visible_alias = "l1")]
    pub l1_years: Option<f64>,
    #[arg(long, conflicts_with = "l2_years")]
    pub l2_days: Option<f64>,
    #[arg(long, visible_alias = "l2")]
    pub l2_years: Option<f64>,
    /// Add Monte Carlo columns next to the closed forms.
    #[arg(long)]
    pub mc: bool,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value_t = 100.0)]
    pub horizon_years: f64,
}

/// Grid, sampling and parallelism shared by the Monte Carlo commands.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, default_value_t = 2000)]
    pub paths: usize,
    /// Step size in business days.
    #[arg(long, default_value_t = 1.0)]
    pub delta_days: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "TRENDLAB_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::OuGbm)]
    pub model: ModelKind,
    #[command(flatten)]
    pub trend: TrendArgs,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub v_inf: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub v0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Horizon in years, 10 when neither this nor --days is given.
    #[arg(long, conflicts_with = "days")]
    pub years: Option<f64>,
    #[arg(long)]
    pub days: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub delta_days: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Registered strategy name: optimal, kalman or crossma.
    #[arg(long)]
    pub strategy: String,
    /// Strategy parameter as key=value. Keys ending in _days or _years are
    /// converted to years and lose the suffix.
    #[arg(long = "param", value_name = "KEY=VALUE", allow_negative_numbers = true)]
    pub params: Vec<String>,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value_t = 50.0)]
    pub horizon_years: f64,
    /// Include a 50-bin histogram of per-path returns.
    #[arg(long)]
    pub histogram: bool,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    /// CSV with header `date,close`, dates as YYYY-MM-DD.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 252)]
    pub tau_days: usize,
    #[arg(long, default_value_t = 0.1)]
    pub m: f64,
    #[arg(long, default_value_t = 5)]
    pub l1_days: usize,
    #[arg(long, default_value_t = 252)]
    pub l2_days: usize,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub gamma: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub alpha: f64,
}
