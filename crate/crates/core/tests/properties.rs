//! Property tests for the model invariants.

use proptest::prelude::*;

use postrev_core::curve::{curve_series, eval_curve, CurveParams};
use postrev_core::domain::{AssetRecord, Category, RunConfig, SalesPoint, TsOrientation};
use postrev_core::fit::fit_growth;
use postrev_core::fit::FitResult;
use postrev_core::rng::{substream, uniform01};
use postrev_core::scenario::{
    build_scenarios, sample_trunc_exp, scenario_distribution, trunc_exp_inv_cdf,
};
use postrev_core::valuation::{npv, percentile};

fn params_strategy() -> impl Strategy<Value = CurveParams> {
    (100.0..5000.0f64, 0.5..4.0f64, 0.1..2.5f64, 2.0..15.0f64)
        .prop_map(|(s, beta0, ramp, t_s)| CurveParams::new(s, beta0, -ramp).with_mid_cycle(t_s))
}

proptest! {
    #[test]
    fn curve_value_is_strictly_inside_zero_and_s(p in params_strategy(), t in -50.0..80.0f64) {
        let v = eval_curve(&p, t);
        prop_assert!(v > 0.0);
        prop_assert!(v < p.s);
    }

    #[test]
    fn curve_mirror_identity(p in params_strategy(), delta in 0.0..40.0f64) {
        let ts = p.t_s.unwrap();
        let lo = eval_curve(&p, ts - delta);
        let hi = eval_curve(&p, ts + delta);
        prop_assert!((lo - hi).abs() <= 1e-12 * lo.abs().max(1e-300));
    }

    #[test]
    fn curve_monotone_each_side_of_mid_cycle(p in params_strategy()) {
        let ts = p.t_s.unwrap();
        let n = 400;
        let mut prev = eval_curve(&p, ts - 20.0);
        for k in 1..=n {
            let t = ts - 20.0 + 20.0 * k as f64 / n as f64;
            let v = eval_curve(&p, t);
            prop_assert!(v >= prev - 1e-12 * prev.abs());
            prev = v;
        }
        let mut prev = eval_curve(&p, ts);
        for k in 1..=n {
            let t = ts + 20.0 * k as f64 / n as f64;
            let v = eval_curve(&p, t);
            prop_assert!(v <= prev + 1e-12 * prev.abs());
            prev = v;
        }
    }

    #[test]
    fn curve_far_left_tail_vanishes(s in 100.0..5000.0f64, beta0 in 0.5..4.0f64, ramp in 0.1..2.5f64) {
        let p = CurveParams::new(s, beta0, -ramp).with_mid_cycle(10.0);
        prop_assert!(eval_curve(&p, 10.0 - 1000.0) < 1e-6 * s);
    }

    #[test]
    fn series_matches_pointwise_eval(p in params_strategy(), start in -5i32..5, len in 0i32..25) {
        let series = curve_series(&p, start, start + len);
        prop_assert_eq!(series.len(), (len + 1) as usize);
        for &(t, v) in &series {
            prop_assert_eq!(v, eval_curve(&p, t as f64));
        }
    }

    #[test]
    fn npv_is_linear(flows in prop::collection::vec((1u32..15, 0.0..1000.0f64), 1..8), alpha in 0.0..10.0f64, r in 0.0..0.5f64) {
        let scaled: Vec<(u32, f64)> = flows.iter().map(|&(t, x)| (t, alpha * x)).collect();
        let a = npv(&scaled, r);
        let b = alpha * npv(&flows, r);
        prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
    }

    #[test]
    fn npv_is_additive_over_disjoint_flow_sets(
        f in prop::collection::vec((1u32..10, 0.0..1000.0f64), 1..6),
        g in prop::collection::vec((10u32..20, 0.0..1000.0f64), 1..6),
        r in 0.0..0.5f64,
    ) {
        let mut merged = f.clone();
        merged.extend_from_slice(&g);
        let lhs = npv(&merged, r);
        let rhs = npv(&f, r) + npv(&g, r);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
    }

    #[test]
    fn npv_non_increasing_in_rate(flows in prop::collection::vec((1u32..15, 0.0..1000.0f64), 1..8), r in 0.0..0.5f64, bump in 0.001..0.5f64) {
        prop_assert!(npv(&flows, r + bump) <= npv(&flows, r) + 1e-12);
    }

    #[test]
    fn percentile_window_contains_median(samples in prop::collection::vec(-1e6..1e6f64, 3..200)) {
        let mut sorted = samples;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lo = percentile(&sorted, 0.025);
        let hi = percentile(&sorted, 0.975);
        let med = percentile(&sorted, 0.5);
        prop_assert!(lo <= med && med <= hi);
    }

    #[test]
    fn trunc_exp_inverse_cdf_is_monotone_and_bounded(rate in 0.05..5.0f64, upper in 0.5..30.0f64, u1 in 0.0..1.0f64, u2 in 0.0..1.0f64) {
        let (a, b) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
        let xa = trunc_exp_inv_cdf(a, rate, upper);
        let xb = trunc_exp_inv_cdf(b, rate, upper);
        prop_assert!(xa >= 0.0 && xb <= upper + 1e-12);
        prop_assert!(xa <= xb);
    }
}

fn window_asset(first_year: i32, n_obs: usize, ip_expiry: i32) -> AssetRecord {
    AssetRecord {
        asset_id: "prop".into(),
        display_name: "Prop".into(),
        launch_year: first_year,
        ip_expiry_year: ip_expiry,
        category: Category::Other,
        n_phase3_trials: 0,
        n_conditions: 0,
        sales: (0..n_obs)
            .map(|i| SalesPoint {
                year: first_year + i as i32,
                revenue_musd: 50.0 * (i + 1) as f64,
            })
            .collect(),
    }
}

fn plain_fit(s: f64, beta0: f64, beta1: f64) -> FitResult {
    FitResult {
        params: CurveParams::new(s, beta0, beta1),
        sse: 0.0,
        n_iterations: 0,
        converged: true,
        t_max: 0.0,
        saturated: false,
        saturation_year: None,
        sse_trace: vec![],
    }
}

proptest! {
    #[test]
    fn scenario_probabilities_normalize_and_order(rate in 0.05..5.0f64, window in 1i32..25, backward in proptest::bool::ANY) {
        let asset = window_asset(2010, 4, 2013 + window);
        let fit = plain_fit(1000.0, 3.0, -1.0);
        let cfg = RunConfig {
            lambda_rate: rate,
            ts_orientation: if backward {
                TsOrientation::BackwardFromIp
            } else {
                TsOrientation::ForwardFromLast
            },
            ..RunConfig::default()
        };
        let dist = scenario_distribution(&fit, &asset, &cfg).unwrap();
        prop_assert_eq!(dist.len(), (window + 1) as usize);
        let total: f64 = dist.iter().map(|&(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        for w in dist.windows(2) {
            prop_assert_eq!(w[1].0, w[0].0 + 1);
            if backward {
                prop_assert!(w[1].1 >= w[0].1 - 1e-15);
            } else {
                prop_assert!(w[1].1 <= w[0].1 + 1e-15);
            }
        }
    }

    #[test]
    fn later_mid_cycle_means_no_less_cumulative(rate in 0.05..3.0f64, window in 1i32..15) {
        let asset = window_asset(2010, 4, 2013 + window);
        let fit = plain_fit(1000.0, 3.0, -1.0);
        let cfg = RunConfig {
            lambda_rate: rate,
            ..RunConfig::default()
        };
        let set = build_scenarios(&fit, &asset, &cfg).unwrap();
        let total: f64 = set.scenarios.iter().map(|s| s.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        for w in set.scenarios.windows(2) {
            prop_assert!(w[1].cumulative_musd >= w[0].cumulative_musd - 1e-9);
        }
        let lo = set
            .scenarios
            .iter()
            .map(|s| s.cumulative_musd)
            .fold(f64::INFINITY, f64::min);
        let hi = set
            .scenarios
            .iter()
            .map(|s| s.cumulative_musd)
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(set.expected_cumulative_musd >= lo - 1e-9);
        prop_assert!(set.expected_cumulative_musd <= hi + 1e-9);
    }

    #[test]
    fn sampled_lags_respect_truncation(seed in 0u64..1000, rate in 0.05..5.0f64, upper in 0.5..30.0f64) {
        let mut rng = substream(seed, "prop-sample", 0);
        for _ in 0..64 {
            let x = sample_trunc_exp(&mut rng, rate, upper).unwrap();
            prop_assert!((0.0..=upper).contains(&x));
        }
    }
}

/// Exact logistic observations plus optional seeded noise; the generator is
/// independent of the curve module.
fn logistic_points(
    s: f64,
    beta0: f64,
    beta1: f64,
    n: usize,
    noise: f64,
    seed: u64,
) -> Vec<(f64, f64)> {
    let mut rng = substream(seed, "equivariance", 0);
    (0..n)
        .map(|k| {
            let t = k as f64;
            let clean = s / (1.0 + (beta0 + beta1 * t).exp());
            let eps = noise * (2.0 * uniform01(&mut rng) - 1.0);
            (t, clean * (1.0 + eps))
        })
        .collect()
}

#[test]
fn fit_is_time_shift_equivariant() {
    for seed in 0..10u64 {
        let pts = logistic_points(1500.0, 3.0, -0.9, 9, 0.005, seed);
        let base = fit_growth(&pts, 1e-9, 400).unwrap();
        let delta = 7.0;
        let shifted: Vec<(f64, f64)> = pts.iter().map(|&(t, y)| (t + delta, y)).collect();
        let moved = fit_growth(&shifted, 1e-9, 400).unwrap();
        let (pb, pm) = (&base.params, &moved.params);
        assert!(
            (pm.s - pb.s).abs() <= 1e-6 * pb.s,
            "seed {seed}: s moved {} -> {}",
            pb.s,
            pm.s
        );
        assert!(
            (pm.beta1 - pb.beta1).abs() <= 1e-6 * pb.beta1.abs(),
            "seed {seed}: beta1 moved"
        );
        let expected_beta0 = pb.beta0 - pb.beta1 * delta;
        assert!(
            (pm.beta0 - expected_beta0).abs() <= 1e-6 * expected_beta0.abs().max(1.0),
            "seed {seed}: beta0 {} want {}",
            pm.beta0,
            expected_beta0
        );
    }
}

#[test]
fn fit_is_scale_equivariant() {
    for seed in 0..10u64 {
        let pts = logistic_points(900.0, 2.5, -1.1, 8, 0.005, seed);
        let base = fit_growth(&pts, 1e-9, 400).unwrap();
        let c = 3.25;
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(t, y)| (t, c * y)).collect();
        let moved = fit_growth(&scaled, 1e-9, 400).unwrap();
        let (pb, pm) = (&base.params, &moved.params);
        assert!(
            (pm.s - c * pb.s).abs() <= 1e-6 * c * pb.s,
            "seed {seed}: s {} want {}",
            pm.s,
            c * pb.s
        );
        assert!((pm.beta0 - pb.beta0).abs() <= 1e-6 * pb.beta0.abs().max(1.0));
        assert!((pm.beta1 - pb.beta1).abs() <= 1e-6 * pb.beta1.abs());
    }
}

#[test]
fn round_trip_survives_offsets_and_back() {
    let asset = window_asset(2011, 6, 2030);
    let offsets = asset.series_offsets();
    let rebuilt: Vec<SalesPoint> = offsets
        .iter()
        .map(|&(t, y)| SalesPoint {
            year: asset.first_sales_year() + t as i32,
            revenue_musd: y,
        })
        .collect();
    assert_eq!(asset.sales, rebuilt);
}

/// The Monte Carlo mean converges (1e4 and 1e5 replicates) toward the
/// deterministic sum of probability-weighted scenario NPVs.
#[test]
fn monte_carlo_mean_converges_to_expected_npv() {
    use postrev_core::valuation::{expected_npv, portfolio_valuation_year, simulate_portfolio};

    let cfg = RunConfig::default();
    let mut sets = Vec::new();
    for (i, window) in [(0u64, 4i32), (1, 7), (2, 2)] {
        let asset = window_asset(2012, 5, 2016 + window);
        let mut asset = asset;
        asset.asset_id = format!("mc{i}");
        let fit = plain_fit(1500.0 + 400.0 * i as f64, 2.5 + 0.3 * i as f64, -0.8);
        sets.push(build_scenarios(&fit, &asset, &cfg).unwrap());
    }
    let valuation_year = portfolio_valuation_year(&sets).unwrap();
    let deterministic: f64 = sets
        .iter()
        .map(|s| expected_npv(s, valuation_year, cfg.discount_rate))
        .sum();

    for n_sims in [10_000u32, 100_000] {
        let config = RunConfig {
            n_sims,
            seed: 99,
            ..RunConfig::default()
        };
        let result = simulate_portfolio(&sets, &config).unwrap();
        let n = result.samples.len() as f64;
        let var = result
            .samples
            .iter()
            .map(|&x| (x - result.mean) * (x - result.mean))
            .sum::<f64>()
            / (n - 1.0);
        let se = (var / n).sqrt();
        assert!(
            (result.mean - deterministic).abs() < 3.0 * se,
            "n_sims={n_sims}: mean {} vs deterministic {deterministic} (se {se})",
            result.mean
        );
    }
}
