use proptest::prelude::*;

use trendlab::analytics::{
    crossma_rate, derived_quantities, filter_variance, misspecified_rate, optimal_duration,
    stationary_filter_variance, std_normal_cdf, well_specified_rate, CrossMaConfig,
    OptimalStrategyConfig, TrendModelParams,
};
use trendlab::backtest::annualized_sharpe;
use trendlab::filters::{discrete_kalman_run, ema_run, steady_state_kalman_run, KalmanConfig};
use trendlab::strategies::{geometric_ma, CrossMa, MarketView, Strategy as _, VarianceView};

const DELTA: f64 = 1.0 / 252.0;

fn params() -> impl Strategy<Value = TrendModelParams> {
    (0.05f64..10.0, 0.0f64..3.0, 0.05f64..1.0)
        .prop_map(|(l, smu, ss)| TrendModelParams::new(l, smu, ss).unwrap())
}

fn returns(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-20.0f64..20.0, 1..len)
}

fn rate(p: &TrendModelParams, m: f64, tau: f64) -> f64 {
    misspecified_rate(p, &OptimalStrategyConfig { m, tau }).unwrap()
}

proptest! {
    #[test]
    fn derived_quantities_are_in_range(p in params()) {
        let d = derived_quantities(&p).unwrap();
        prop_assert!(d.beta >= 1.0);
        prop_assert!(d.m_star >= 0.0 && d.m_star < 1.0);
        prop_assert!((d.tau_star * p.lambda * d.beta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn calibrated_filter_is_best_duration(p in params(), tau in 0.01f64..20.0) {
        let d = derived_quantities(&p).unwrap();
        let best = well_specified_rate(&p).unwrap();
        prop_assert!(rate(&p, d.m_star, tau) <= best + 1e-12 * best.abs().max(1e-12));
    }

    #[test]
    fn rate_increases_with_snr(l in 0.05f64..10.0, s1 in 0.0f64..5.0, ds in 0.001f64..5.0,
                               m in 0.01f64..1.99, tau in 0.01f64..20.0) {
        let a = TrendModelParams::from_snr(l, s1, 0.3).unwrap();
        let b = TrendModelParams::from_snr(l, s1 + ds, 0.3).unwrap();
        prop_assert!(rate(&b, m, tau) > rate(&a, m, tau));
    }

    #[test]
    fn rate_decreases_with_lambda_at_fixed_snr(l in 0.05f64..10.0, dl in 0.001f64..5.0,
                                              snr in 0.0f64..5.0, m in 0.01f64..1.99, tau in 0.01f64..20.0) {
        let a = TrendModelParams::from_snr(l, snr, 0.3).unwrap();
        let b = TrendModelParams::from_snr(l + dl, snr, 0.3).unwrap();
        prop_assert!(rate(&b, m, tau) < rate(&a, m, tau));
    }

    #[test]
    fn tau_min_separates_signs(p in params(), m in 0.01f64..1.99) {
        let sol = optimal_duration(&p, m).unwrap();
        match (sol.feasible, sol.tau_min, sol.tau_opt) {
            (true, Some(lo), Some(opt)) => {
                prop_assert!(lo < opt);
                prop_assert!(rate(&p, m, lo * 0.9) < 0.0);
                prop_assert!(rate(&p, m, lo * 1.1) > 0.0);
                prop_assert!(rate(&p, m, opt) > 0.0);
            }
            (false, None, None) => {
                for tau in [0.01, 1.0, 100.0, 1e5] {
                    prop_assert!(rate(&p, m, tau) <= 0.0);
                }
            }
            other => prop_assert!(false, "inconsistent solution {:?}", other),
        }
    }

    #[test]
    fn filter_variance_is_bounded(p in params(), tau in 0.01f64..20.0, t in 0.0f64..50.0) {
        let v = filter_variance(&p, tau, t).unwrap().variance;
        let s = stationary_filter_variance(&p, tau).unwrap();
        prop_assert!(v >= -1e-15 && v.is_finite());
        // the transient variance never exceeds the noise part plus the full trend variance
        prop_assert!(v <= s + p.stationary_trend_variance() + 1e-12);
    }

    #[test]
    fn crossma_rate_is_finite(p in params(), gamma in -2.0f64..2.0, alpha in -2.0f64..2.0,
                              l1 in 0.0f64..2.0, dl in 0.01f64..3.0) {
        let c = CrossMaConfig::new(gamma, alpha, l1, l1 + dl).unwrap();
        prop_assert!(crossma_rate(&p, &c).unwrap().is_finite());
    }

    #[test]
    fn normal_cdf_symmetry(x in -30.0f64..30.0) {
        prop_assert!((std_normal_cdf(x) + std_normal_cdf(-x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ema_is_linear(y in returns(300), a in -5.0f64..5.0, tau in 0.05f64..5.0) {
        let base = ema_run(&y, tau, DELTA).unwrap();
        let scaled: Vec<f64> = y.iter().map(|v| a * v).collect();
        let out = ema_run(&scaled, tau, DELTA).unwrap();
        prop_assert_eq!(out.len(), y.len());
        for (o, b) in out.iter().zip(&base) {
            prop_assert!((o - a * b).abs() <= 1e-12 * (1.0 + (a * b).abs()));
        }
    }

    #[test]
    fn steady_state_is_exactly_scaled_ema(y in returns(300), p in params()) {
        prop_assume!(p.sigma_mu > 0.0);
        let d = derived_quantities(&p).unwrap();
        prop_assume!(d.tau_star > DELTA);
        let ema = ema_run(&y, d.tau_star, DELTA).unwrap();
        let kf = steady_state_kalman_run(&y, &p, DELTA).unwrap();
        for (k, e) in kf.iter().zip(&ema) {
            prop_assert_eq!(*k, d.m_star * e);
        }
    }

    #[test]
    fn kalman_error_variance_non_negative(y in returns(300), v in prop::collection::vec(0.001f64..1.0, 300),
                                          l in 0.1f64..5.0, smu in 0.0f64..2.0) {
        let agent = KalmanConfig::new(l, smu).unwrap();
        let t = discrete_kalman_run(&y, &v[..y.len()], &agent, DELTA).unwrap();
        prop_assert!(t.error_vars.iter().all(|&e| e >= 0.0));
        prop_assert!(t.gains.iter().all(|&g| (0.0..=1.0).contains(&g)));
    }

    #[test]
    fn gma_lies_within_window_range(prices in prop::collection::vec(0.1f64..100.0, 2..200), w in 1usize..20) {
        prop_assume!(prices.len() >= w);
        let g = geometric_ma(&prices, w).unwrap();
        for (i, gi) in g.iter().enumerate() {
            let win = &prices[i..i + w];
            let lo = win.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = win.iter().cloned().fold(0.0, f64::max);
            prop_assert!(*gi >= lo * (1.0 - 1e-12) && *gi <= hi * (1.0 + 1e-12));
        }
    }

    #[test]
    fn crossma_allocates_two_values(moves in prop::collection::vec(-0.05f64..0.05, 40..200),
                                    gamma in -1.5f64..1.5, alpha in -2.0f64..2.0) {
        let mut prices = vec![1.0];
        for m in &moves {
            let last = *prices.last().unwrap();
            prices.push(last * (1.0 + m));
        }
        let r: Vec<f64> = moves.iter().map(|m| m / DELTA).collect();
        let view = MarketView::new(&prices, &r, VarianceView::Constant(0.09), DELTA).unwrap();
        let s = CrossMa::new(CrossMaConfig::new(gamma, alpha, 3.0 * DELTA, 20.0 * DELTA).unwrap()).unwrap();
        let t = s.run(&view).unwrap();
        prop_assert!(t.allocations.iter().all(|&a| a == gamma || a == gamma + alpha));
        prop_assert_eq!(t.log_wealth[0], 0.0);
    }

    #[test]
    fn sharpe_is_scale_invariant(r in prop::collection::vec(-0.1f64..0.1, 2..100), c in 0.01f64..100.0) {
        let scaled: Vec<f64> = r.iter().map(|x| x * c).collect();
        match (annualized_sharpe(&r), annualized_sharpe(&scaled)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs())),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }
}
