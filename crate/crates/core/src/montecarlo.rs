//! Parallel Monte Carlo experiments and the parameter sweeps behind the
//! rate and duration tables.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{
    crossma_rate, derived_quantities, misspecified_rate, optimal_duration, CrossMaConfig,
    OptimalStrategyConfig, TrendModelParams,
};
use crate::error::ParamError;
use crate::simulation::{path_rng, ModelConfig, PathGrid, PathRng};
use crate::strategies::{MarketView, StrategyParams, StrategyRegistry, StrategySpec};

pub const HISTOGRAM_BINS: usize = 50;

#[derive(Debug, Error)]
pub enum McError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("at least two paths are required, got {0}")]
    TooFewPaths(usize),
    #[error("only {survivors} of {paths} paths stayed solvent; need two for a standard error")]
    TooFewSurvivors { survivors: usize, paths: usize },
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McExperimentConfig {
    pub model: ModelConfig,
    pub strategy: StrategySpec,
    pub delta: f64,
    /// Simulated years, a whole number of steps.
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub histogram: bool,
}

impl McExperimentConfig {
    pub fn grid(&self) -> Result<PathGrid, ParamError> {
        PathGrid::with_horizon(self.delta, self.horizon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    /// Mean annualized log-return over solvent paths.
    pub mean: f64,
    pub stderr: f64,
    pub std_dev: f64,
    pub m_paths: usize,
    pub bankrupts: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub histogram: Option<Histogram>,
}

/// Summation by recursive halving; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Sample mean and (n-1) variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, pairwise_sum(&dev) / (n - 1.0))
}

/// `n` equally spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Runs `f(index, rng)` for every path on a pool of `workers` threads and
/// returns the results in path order. Path `i` always receives the stream
/// `path_rng(seed, i)`.
pub fn map_paths<T, F>(paths: usize, seed: u64, workers: usize, f: F) -> Result<Vec<T>, McError>
where
    T: Send,
    F: Fn(usize, &mut PathRng) -> Result<T, ParamError> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()?;
    let out: Result<Vec<T>, ParamError> = pool.install(|| {
        (0..paths)
            .into_par_iter()
            .map(|i| f(i, &mut path_rng(seed, i as u64)))
            .collect()
    });
    Ok(out?)
}

/// Per-path annualized log-returns; `None` marks a bankrupt path.
pub fn run_mc_samples(
    config: &McExperimentConfig,
    registry: &StrategyRegistry,
    workers: usize,
) -> Result<Vec<Option<f64>>, McError> {
    if config.paths < 2 {
        return Err(McError::TooFewPaths(config.paths));
    }
    config.model.validate()?;
    let grid = config.grid()?;
    let strategy = registry.build(&config.strategy)?;
    let s2 = config.model.constant_variance();
    map_paths(config.paths, config.seed, workers, |_, rng| {
        let path = config.model.simulate(&grid, rng)?;
        let view = MarketView::from_path(&path, s2)?;
        Ok(strategy.run(&view)?.annualized_log_return())
    })
}

pub fn summarize(samples: &[Option<f64>], histogram: bool) -> Result<McSummary, McError> {
    let good: Vec<f64> = samples.iter().flatten().copied().collect();
    if good.len() < 2 {
        return Err(McError::TooFewSurvivors {
            survivors: good.len(),
            paths: samples.len(),
        });
    }
    let (mean, var) = mean_var(&good);
    let std_dev = var.sqrt();
    Ok(McSummary {
        mean,
        stderr: std_dev / (good.len() as f64).sqrt(),
        std_dev,
        m_paths: samples.len(),
        bankrupts: samples.len() - good.len(),
        histogram: histogram.then(|| build_histogram(&good, mean, std_dev)),
    })
}

/// 50 uniform bins over `mean +- 4 sd`; outliers are counted in the end bins.
fn build_histogram(xs: &[f64], mean: f64, sd: f64) -> Histogram {
    let half = if sd > 0.0 { 4.0 * sd } else { 0.5 };
    let (lo, hi) = (mean - half, mean + half);
    let edges = linspace(lo, hi, HISTOGRAM_BINS + 1);
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let mut counts = vec![0u64; HISTOGRAM_BINS];
    for &x in xs {
        let b = ((x - lo) / width).floor();
        let b = if b < 0.0 { 0 } else { (b as usize).min(HISTOGRAM_BINS - 1) };
        counts[b] += 1;
    }
    Histogram { edges, counts }
}

pub fn run_mc(
    config: &McExperimentConfig,
    registry: &StrategyRegistry,
    workers: usize,
) -> Result<McSummary, McError> {
    summarize(&run_mc_samples(config, registry, workers)?, config.histogram)
}

/// Monte Carlo settings shared by every row of a rate sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepMc {
    pub paths: usize,
    pub horizon: f64,
    pub delta: f64,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSweepConfig {
    pub lambda: f64,
    pub sigma_s: f64,
    pub sigma_mu: Vec<f64>,
    pub optimal: OptimalStrategyConfig,
    pub crossma: CrossMaConfig,
    pub mc: Option<SweepMc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub sigma_mu: f64,
    pub rate_optimal_cf: f64,
    pub rate_crossma_cf: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_optimal_mc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se_optimal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_crossma_mc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se_crossma: Option<f64>,
}

pub fn sweep_rates(config: &RateSweepConfig) -> Result<Vec<RateRow>, McError> {
    let registry = StrategyRegistry::default();
    let o = &config.optimal;
    let c = &config.crossma;
    let opt_spec = StrategySpec::new("optimal", StrategyParams::from_pairs(&[("m", o.m), ("tau", o.tau)]));
    let cma_spec = StrategySpec::new(
        "crossma",
        StrategyParams::from_pairs(&[("gamma", c.gamma), ("alpha", c.alpha), ("l1", c.l1), ("l2", c.l2)]),
    );
    let mut rows = Vec::with_capacity(config.sigma_mu.len());
    for &sigma_mu in &config.sigma_mu {
        let p = TrendModelParams::new(config.lambda, sigma_mu, config.sigma_s)?;
        let mut row = RateRow {
            sigma_mu,
            rate_optimal_cf: misspecified_rate(&p, o)?,
            rate_crossma_cf: crossma_rate(&p, c)?,
            rate_optimal_mc: None,
            se_optimal: None,
            rate_crossma_mc: None,
            se_crossma: None,
        };
        if let Some(mc) = &config.mc {
            let run = |spec: &StrategySpec| {
                let cfg = McExperimentConfig {
                    model: ModelConfig::OuGbm { params: p },
                    strategy: spec.clone(),
                    delta: mc.delta,
                    horizon: mc.horizon,
                    paths: mc.paths,
                    seed: mc.seed,
                    histogram: false,
                };
                run_mc(&cfg, &registry, mc.workers)
            };
            let a = run(&opt_spec)?;
            let b = run(&cma_spec)?;
            row.rate_optimal_mc = Some(a.mean);
            row.se_optimal = Some(a.stderr);
            row.rate_crossma_mc = Some(b.mean);
            row.se_crossma = Some(b.stderr);
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_rate_table<W: Write>(rows: &[RateRow], out: W) -> Result<(), McError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurationRow {
    pub lambda: f64,
    pub snr: f64,
    pub beta: f64,
    pub tau_star: f64,
    pub m: f64,
    pub feasible: bool,
    pub tau_min: Option<f64>,
    pub tau_opt: Option<f64>,
}

/// `tau*` and the mis-specified `tau_min`, `tau_opt` on the `lambda x snr` grid.
pub fn sweep_durations(lambdas: &[f64], snrs: &[f64], m: f64) -> Result<Vec<DurationRow>, ParamError> {
    let mut rows = Vec::with_capacity(lambdas.len() * snrs.len());
    for &lambda in lambdas {
        for &snr in snrs {
            // every column depends on (lambda, snr) only; sigma_s is a placeholder
            let p = TrendModelParams::from_snr(lambda, snr, 1.0)?;
            let d = derived_quantities(&p)?;
            let sol = optimal_duration(&p, m)?;
            rows.push(DurationRow {
                lambda,
                snr,
                beta: d.beta,
                tau_star: d.tau_star,
                m,
                feasible: sol.feasible,
                tau_min: sol.tau_min,
                tau_opt: sol.tau_opt,
            });
        }
    }
    Ok(rows)
}

pub fn write_duration_table<W: Write>(rows: &[DurationRow], out: W) -> Result<(), McError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_model() -> ModelConfig {
        ModelConfig::OuGbm {
            params: TrendModelParams::new(1.0, 0.9, 0.3).unwrap(),
        }
    }

    fn config(strategy: StrategySpec, paths: usize, horizon: f64) -> McExperimentConfig {
        McExperimentConfig {
            model: reference_model(),
            strategy,
            delta: 1.0 / 252.0,
            horizon,
            paths,
            seed: 11,
            histogram: true,
        }
    }

    #[test]
    fn zero_leverage_has_zero_mean_and_error() {
        let spec = StrategySpec::new("optimal", StrategyParams::from_pairs(&[("m", 0.0), ("tau", 1.0)]));
        let s = run_mc(&config(spec, 20, 2.0), &StrategyRegistry::default(), 2).unwrap();
        assert_eq!((s.mean, s.stderr, s.bankrupts), (0.0, 0.0, 0));
        assert_eq!(s.histogram.unwrap().counts.iter().sum::<u64>(), 20);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let spec = StrategySpec::new("optimal", StrategyParams::from_pairs(&[("m", 1.0), ("tau", 1.0)]));
        let cfg = config(spec, 37, 3.0);
        let r = StrategyRegistry::default();
        let a = serde_json::to_string(&run_mc(&cfg, &r, 1).unwrap()).unwrap();
        let b = serde_json::to_string(&run_mc(&cfg, &r, 3).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn histogram_counts_every_survivor() {
        let xs = [Some(1.0), None, Some(2.0), Some(30.0), Some(-4.0), Some(1.5)];
        let s = summarize(&xs, true).unwrap();
        assert_eq!(s.bankrupts, 1);
        let h = s.histogram.unwrap();
        assert_eq!(h.edges.len(), 51);
        assert_eq!(h.counts.iter().sum::<u64>(), 5);
        assert!((s.stderr - s.std_dev / 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_too_few_paths() {
        let spec = StrategySpec::new("optimal", StrategyParams::from_pairs(&[("m", 1.0), ("tau", 1.0)]));
        assert!(matches!(
            run_mc(&config(spec, 1, 1.0), &StrategyRegistry::default(), 1),
            Err(McError::TooFewPaths(1))
        ));
        assert!(summarize(&[Some(1.0), None], false).is_err());
    }

    #[test]
    fn pairwise_sum_is_accurate() {
        let xs: Vec<f64> = (0..10_000).map(|i| 0.1 + i as f64 * 1e-9).collect();
        let exact = 1000.0 + 1e-9 * (9999.0 * 10_000.0 / 2.0);
        assert!((pairwise_sum(&xs) - exact).abs() < 1e-10);
        assert_eq!(mean_var(&[1.0, 3.0]), (2.0, 2.0));
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(0.0, 1.5, 16);
        assert_eq!(g.len(), 16);
        assert_eq!((g[0], g[15]), (0.0, 1.5));
        assert!((g[1] - 0.1).abs() < 1e-15);
        assert_eq!(linspace(2.0, 3.0, 1), vec![2.0]);
    }

    fn figure5_sweep(grid: Vec<f64>) -> RateSweepConfig {
        RateSweepConfig {
            lambda: 1.0,
            sigma_s: 0.3,
            sigma_mu: grid,
            optimal: OptimalStrategyConfig::new(1.0, 1.0).unwrap(),
            crossma: CrossMaConfig::new(-1.0, 2.0, 5.0 / 252.0, 1.0).unwrap(),
            mc: None,
        }
    }

    #[test]
    fn rate_sweep_rows() {
        let rows = sweep_rates(&figure5_sweep(linspace(0.0, 1.0, 21))).unwrap();
        assert_eq!(rows.len(), 21);
        assert!((rows[0].rate_optimal_cf + 0.25).abs() < 1e-15);
        assert!((rows[0].rate_crossma_cf + 0.045).abs() < 1e-15);
        for w in rows.windows(2) {
            assert!(w[1].rate_optimal_cf >= w[0].rate_optimal_cf);
            assert!(w[1].rate_crossma_cf >= w[0].rate_crossma_cf);
        }
        let mut buf = Vec::new();
        write_rate_table(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "sigma_mu,rate_optimal_cf,rate_crossma_cf");
        assert_eq!(text.lines().count(), 22);
    }

    #[test]
    fn rate_sweep_with_mc_columns() {
        let mut cfg = figure5_sweep(vec![0.5]);
        cfg.mc = Some(SweepMc {
            paths: 4,
            horizon: 2.0,
            delta: 1.0 / 252.0,
            seed: 3,
            workers: 2,
        });
        let rows = sweep_rates(&cfg).unwrap();
        let mut buf = Vec::new();
        write_rate_table(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "sigma_mu,rate_optimal_cf,rate_crossma_cf,rate_optimal_mc,se_optimal,rate_crossma_mc,se_crossma"
        );
    }

    #[test]
    fn duration_sweep_reference_row() {
        let rows = sweep_durations(&[1.0], &[1.0], 1.0).unwrap();
        let r = rows[0];
        assert!((r.tau_star - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((r.tau_opt.unwrap() - (1.0 + 2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn duration_sweep_decreases_and_flags() {
        let lambdas = linspace(0.1, 3.0, 15);
        let snrs = linspace(0.1, 3.0, 15);
        let rows = sweep_durations(&lambdas, &snrs, 1.0).unwrap();
        assert_eq!(rows.len(), 225);
        for i in 0..15 {
            for j in 0..15 {
                let r = rows[i * 15 + j];
                if j + 1 < 15 {
                    assert!(rows[i * 15 + j + 1].tau_star < r.tau_star);
                }
                if i + 1 < 15 {
                    assert!(rows[(i + 1) * 15 + j].tau_star < r.tau_star);
                }
                assert_eq!(r.feasible, 2.0 * r.snr > r.lambda);
                assert_eq!(r.feasible, r.tau_opt.is_some());
            }
        }
        let mut buf = Vec::new();
        write_duration_table(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "lambda,snr,beta,tau_star,m,feasible,tau_min,tau_opt"
        );
        assert!(text.lines().any(|l| l.ends_with("false,,")));
    }
}
