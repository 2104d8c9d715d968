mod args;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;
use thiserror::Error;

use trendlab::analytics::{
    crossma_rate, days_to_years, derived_quantities, filter_variance, misspecified_rate,
    optimal_duration, single_ma_rate, well_specified_rate, CrossMaConfig, OptimalStrategyConfig,
    TrendModelParams,
};
use trendlab::backtest::{load_price_csv, run_backtest, BacktestError, BacktestProtocol};
use trendlab::montecarlo::{
    linspace, run_mc, sweep_durations, sweep_rates, write_duration_table, write_rate_table,
    McError, McExperimentConfig, RateSweepConfig, SweepMc,
};
use trendlab::simulation::{path_rng, HestonParams, ModelConfig, OuTrend, PathGrid};
use trendlab::strategies::{StrategyParams, StrategyRegistry, StrategySpec};
use trendlab::ParamError;

use args::{
    AnalyticArgs, BacktestArgs, Cli, Command, Grid, McArgs, ModelArgs, ModelKind, RunArgs,
    SimulateArgs, SweepDurationsArgs, SweepRatesArgs, TrendArgs,
};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Mc(#[from] McError),
    #[error(transparent)]
    Backtest(#[from] BacktestError),
    #[error("{0}")]
    Infeasible(String),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::Param(_) | Self::Mc(McError::Param(_)) => EXIT_USAGE,
            Self::Infeasible(_) => EXIT_INFEASIBLE,
            Self::Backtest(e) => match e {
                BacktestError::Io { .. }
                | BacktestError::Header { .. }
                | BacktestError::Row { .. }
                | BacktestError::Date { .. }
                | BacktestError::Close { .. }
                | BacktestError::NonPositiveClose { .. }
                | BacktestError::Unsorted { .. }
                | BacktestError::DuplicateDate { .. }
                | BacktestError::Param(ParamError::TooShort { .. }) => EXIT_DATA,
                BacktestError::Param(_) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            },
            _ => EXIT_FAILURE,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out = match cli.command {
        Command::Analytic(a) => analytic(&a)?,
        Command::SweepDurations(a) => sweep_durations_cmd(&a)?,
        Command::SweepRates(a) => sweep_rates_cmd(&a)?,
        Command::Simulate(a) => simulate(&a)?,
        Command::Mc(a) => mc(&a)?,
        Command::Backtest(a) => backtest(&a)?,
    };
    emit(cli.output.as_deref(), &out)
}

/// Everything is rendered into memory first so a failed run leaves no partial file.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|source| CliError::Output {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Rounds to 15 significant digits so closed forms print without float noise.
fn format_scalar(x: f64) -> String {
    let rounded: f64 = format!("{x:.14e}").parse().unwrap_or(x);
    format!("{rounded}\n")
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut s = serde_json::to_vec_pretty(value)?;
    s.push(b'\n');
    Ok(s)
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("{flag} is required")))
}

/// Duration in years from a days/years flag pair.
fn duration(days: Option<f64>, years: Option<f64>, default: Option<f64>, name: &str) -> Result<f64, CliError> {
    match (days, years) {
        (Some(d), _) => Ok(days_to_years(d)),
        (None, Some(y)) => Ok(y),
        (None, None) => default.ok_or_else(|| {
            CliError::Usage(format!("--{name}-days or --{name}-years is required"))
        }),
    }
}

fn trend_params(t: &TrendArgs) -> Result<TrendModelParams, CliError> {
    let lambda = required(t.lambda, "--lambda")?;
    let sigma_s = required(t.sigma_s, "--sigma-s")?;
    let p = match (t.sigma_mu, t.snr) {
        (Some(s), _) => TrendModelParams::new(lambda, s, sigma_s)?,
        (None, Some(snr)) => TrendModelParams::from_snr(lambda, snr, sigma_s)?,
        (None, None) => return Err(CliError::Usage("--sigma-mu or --snr is required".into())),
    };
    Ok(p)
}

fn resolve_grid(g: &Grid) -> Vec<f64> {
    match g {
        Grid::Range { start, end, n } => linspace(*start, *end, *n),
        Grid::List(xs) => xs.clone(),
    }
}

fn analytic(a: &AnalyticArgs) -> Result<Vec<u8>, CliError> {
    let p = trend_params(&a.trend)?;
    let tau = || duration(a.tau_days, a.tau_years, None, "tau");
    let l1 = || duration(a.l1_days, a.l1_years, Some(days_to_years(5.0)), "l1");
    let l2 = || duration(a.l2_days, a.l2_years, Some(1.0), "l2");
    if a.misspecified {
        let cfg = OptimalStrategyConfig::new(required(a.m, "--m")?, tau()?)?;
        Ok(format_scalar(misspecified_rate(&p, &cfg)?).into_bytes())
    } else if a.well_specified {
        Ok(format_scalar(well_specified_rate(&p)?).into_bytes())
    } else if a.derived {
        json(&derived_quantities(&p)?)
    } else if a.crossma {
        let cfg = CrossMaConfig::new(a.gamma, a.alpha, l1()?, l2()?)?;
        Ok(format_scalar(crossma_rate(&p, &cfg)?).into_bytes())
    } else if a.single_ma {
        Ok(format_scalar(single_ma_rate(&p, a.gamma, a.alpha, l2()?)?).into_bytes())
    } else if a.duration {
        let m = required(a.m, "--m")?;
        let sol = optimal_duration(&p, m)?;
        if !sol.feasible {
            return Err(CliError::Infeasible(format!(
                "no duration gives a positive rate at m = {m}, lambda = {}, snr = {}",
                p.lambda,
                p.snr()
            )));
        }
        json(&sol)
    } else {
        let t = a.t_years.unwrap_or(f64::INFINITY);
        Ok(format_scalar(filter_variance(&p, tau()?, t)?.variance).into_bytes())
    }
}

fn sweep_durations_cmd(a: &SweepDurationsArgs) -> Result<Vec<u8>, CliError> {
    let rows = sweep_durations(&resolve_grid(&a.lambda), &resolve_grid(&a.snr), a.m)?;
    let mut buf = Vec::new();
    write_duration_table(&rows, &mut buf)?;
    Ok(buf)
}

fn workers(run: &RunArgs) -> Result<usize, CliError> {
    match run.workers {
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        Some(w) => Ok(w),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn sweep_rates_cmd(a: &SweepRatesArgs) -> Result<Vec<u8>, CliError> {
    let tau = duration(a.tau_days, a.tau_years, Some(1.0), "tau")?;
    let l1 = duration(a.l1_days, a.l1_years, Some(days_to_years(5.0)), "l1")?;
    let l2 = duration(a.l2_days, a.l2_years, Some(1.0), "l2")?;
    let mc = if a.mc {
        Some(SweepMc {
            paths: a.run.paths,
            horizon: a.horizon_years,
            delta: days_to_years(a.run.delta_days),
            seed: a.run.seed,
            workers: workers(&a.run)?,
        })
    } else {
        None
    };
    let config = RateSweepConfig {
        lambda: a.lambda,
        sigma_s: a.sigma_s,
        sigma_mu: resolve_grid(&a.sigma_mu),
        optimal: OptimalStrategyConfig::new(a.m, tau)?,
        crossma: CrossMaConfig::new(a.gamma, a.alpha, l1, l2)?,
        mc,
    };
    let rows = sweep_rates(&config)?;
    let mut buf = Vec::new();
    write_rate_table(&rows, &mut buf)?;
    Ok(buf)
}

fn model_config(m: &ModelArgs) -> Result<ModelConfig, CliError> {
    let config = match m.model {
        ModelKind::OuGbm => ModelConfig::OuGbm {
            params: trend_params(&m.trend)?,
        },
        ModelKind::Heston => {
            if m.trend.snr.is_some() {
                return Err(CliError::Usage("--snr needs a constant volatility; use --sigma-mu with --model heston".into()));
            }
            let reference = HestonParams::reference();
            ModelConfig::Heston {
                trend: OuTrend::new(required(m.trend.lambda, "--lambda")?, required(m.trend.sigma_mu, "--sigma-mu")?)?,
                heston: HestonParams {
                    kappa: m.kappa.unwrap_or(reference.kappa),
                    v_inf: m.v_inf.unwrap_or(reference.v_inf),
                    eps: m.eps.unwrap_or(reference.eps),
                    rho: m.rho.unwrap_or(reference.rho),
                    v0: m.v0.unwrap_or(reference.v0),
                },
            }
        }
    };
    config.validate()?;
    Ok(config)
}

fn simulate(a: &SimulateArgs) -> Result<Vec<u8>, CliError> {
    let model = model_config(&a.model)?;
    let horizon = duration(a.days, a.years, Some(10.0), "horizon")?;
    let grid = PathGrid::with_horizon(days_to_years(a.delta_days), horizon)?;
    let path = model.simulate(&grid, &mut path_rng(a.seed, 0))?;
    let mut buf = Vec::new();
    path.write_csv(&mut buf)?;
    Ok(buf)
}

/// `key=value`; `_days` and `_years` suffixes become plain keys in years.
fn strategy_params(raw: &[String]) -> Result<StrategyParams, CliError> {
    let mut params = StrategyParams::new();
    for item in raw {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--param `{item}` must look like key=value")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--param `{item}`: `{value}` is not a number")))?;
        let key = key.trim();
        let (key, value) = if let Some(k) = key.strip_suffix("_days") {
            (k, days_to_years(value))
        } else if let Some(k) = key.strip_suffix("_years") {
            (k, value)
        } else {
            (key, value)
        };
        if params.get(key).is_some() {
            return Err(CliError::Usage(format!("--param `{key}` given twice")));
        }
        params.insert(key, value);
    }
    Ok(params)
}

#[derive(Serialize)]
struct McOutput<'a> {
    config: &'a McExperimentConfig,
    summary: trendlab::montecarlo::McSummary,
}

fn mc(a: &McArgs) -> Result<Vec<u8>, CliError> {
    let registry = StrategyRegistry::default();
    let config = McExperimentConfig {
        model: model_config(&a.model)?,
        strategy: StrategySpec::new(&a.strategy, strategy_params(&a.params)?),
        delta: days_to_years(a.run.delta_days),
        horizon: a.horizon_years,
        paths: a.run.paths,
        seed: a.run.seed,
        histogram: a.histogram,
    };
    // fail on bad flags before any path is simulated
    registry.build(&config.strategy)?;
    config.grid()?;
    let workers = workers(&a.run)?;
    let summary = run_mc(&config, &registry, workers)?;
    json(&McOutput {
        config: &config,
        summary,
    })
}

fn backtest(a: &BacktestArgs) -> Result<Vec<u8>, CliError> {
    let protocol = BacktestProtocol {
        tau_days: a.tau_days,
        m: a.m,
        l1_days: a.l1_days,
        l2_days: a.l2_days,
        gamma: a.gamma,
        alpha: a.alpha,
    };
    let series = load_price_csv(&a.input)?;
    json(&run_backtest(&series, &protocol)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalars_drop_float_noise() {
        assert_eq!(format_scalar(0.875), "0.875\n");
        assert_eq!(format_scalar(0.1 + 0.2), "0.3\n");
        assert_eq!(format_scalar(-0.25), "-0.25\n");
    }

    #[test]
    fn duration_suffixes() {
        let p = strategy_params(&["tau_days=126".into(), "m=1".into(), "l2_years=2".into()]).unwrap();
        assert_eq!(p.get("tau"), Some(0.5));
        assert_eq!(p.get("m"), Some(1.0));
        assert_eq!(p.get("l2"), Some(2.0));
        assert!(strategy_params(&["tau".into()]).is_err());
        assert!(strategy_params(&["tau=x".into()]).is_err());
        assert!(strategy_params(&["tau=1".into(), "tau_days=252".into()]).is_err());
    }

    #[test]
    fn days_win_over_default() {
        assert_eq!(duration(Some(252.0), None, Some(3.0), "tau").unwrap(), 1.0);
        assert_eq!(duration(None, None, Some(3.0), "tau").unwrap(), 3.0);
        assert!(matches!(duration(None, None, None, "tau"), Err(CliError::Usage(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::Infeasible(String::new()).exit_code(), EXIT_INFEASIBLE);
        let short = BacktestError::Param(ParamError::TooShort { len: 1, required: 2 });
        assert_eq!(CliError::Backtest(short).exit_code(), EXIT_DATA);
        let header = BacktestError::Header { found: "x".into() };
        assert_eq!(CliError::Backtest(header).exit_code(), EXIT_DATA);
        assert_eq!(CliError::Mc(McError::TooFewPaths(1)).exit_code(), EXIT_FAILURE);
    }
}
