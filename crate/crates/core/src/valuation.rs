//! Discounted cash flows, the Monte Carlo portfolio simulation, and the
//! market-cap decomposition.

use alloc::vec::Vec;
use core::fmt;

use crate::domain::RunConfig;
use crate::num;
use crate::rng::{substream, uniform01};
use crate::scenario::ScenarioSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValuationError {
    EmptyPortfolio,
}

impl fmt::Display for ValuationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValuationError::EmptyPortfolio => write!(f, "no scenario sets to simulate"),
        }
    }
}

impl core::error::Error for ValuationError {}

/// Company balance-sheet aggregates, USD millions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceSheet {
    pub market_cap: f64,
    pub current_assets: f64,
    pub cash_on_hand: f64,
    pub total_liabilities: f64,
}

/// Monte Carlo portfolio NPV sample set with summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationResult {
    /// One portfolio NPV per replicate, USD millions, in replicate order.
    pub samples: Vec<f64>,
    pub mean: f64,
    /// Central 95% percentile interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_sims: u32,
    pub seed: u64,
}

/// Net present value of dated cash flows: sum of X_t / (1 + r)^t over t >= 1.
pub fn npv(cash_flows: &[(u32, f64)], rate: f64) -> f64 {
    cash_flows
        .iter()
        .map(|&(t, x)| x / num::powi(1.0 + rate, t as i32))
        .sum()
}

/// Linear-interpolation percentile of an ascending-sorted sample
/// (interpolates between adjacent order statistics).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = num::floor(h) as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// NPV of one scenario's forecast path as of `valuation_year`. Flows at or
/// before the valuation date are sunk and excluded (t starts at 1).
fn path_npv(path: &[(i32, f64)], valuation_year: i32, rate: f64) -> f64 {
    let flows: Vec<(u32, f64)> = path
        .iter()
        .filter(|&&(year, _)| year > valuation_year)
        .map(|&(year, v)| ((year - valuation_year) as u32, v))
        .collect();
    npv(&flows, rate)
}

/// Per-scenario NPVs for one asset as of `valuation_year`.
pub fn scenario_npvs(set: &ScenarioSet, valuation_year: i32, rate: f64) -> Vec<f64> {
    set.scenarios
        .iter()
        .map(|sc| path_npv(&sc.path, valuation_year, rate))
        .collect()
}

/// Probability-weighted NPV for one asset (the deterministic expectation the
/// Monte Carlo mean converges to).
pub fn expected_npv(set: &ScenarioSet, valuation_year: i32, rate: f64) -> f64 {
    set.scenarios
        .iter()
        .map(|sc| sc.probability * path_npv(&sc.path, valuation_year, rate))
        .sum()
}

/// Latest last-observed year across the portfolio; future flows are indexed
/// t = 1, 2, ... from here.
pub fn portfolio_valuation_year(sets: &[ScenarioSet]) -> Option<i32> {
    sets.iter().map(|s| s.last_observed_year).max()
}

/// Seeded Monte Carlo simulation of the portfolio NPV.
///
/// Each replicate draws one scenario per asset (independently, from the
/// (seed, asset_id, replicate) substream), sums the scenario NPVs across
/// assets, and records the total. Determinism is per-replicate, so results
/// do not depend on evaluation order.
pub fn simulate_portfolio(
    sets: &[ScenarioSet],
    config: &RunConfig,
) -> Result<ValuationResult, ValuationError> {
    let valuation_year = portfolio_valuation_year(sets).ok_or(ValuationError::EmptyPortfolio)?;
    let rate = config.discount_rate;
    let n_sims = config.n_sims;
    let seed = config.seed;

    struct AssetDraw<'a> {
        asset_id: &'a str,
        cumulative_prob: Vec<f64>,
        npvs: Vec<f64>,
    }
    let per_asset: Vec<AssetDraw<'_>> = sets
        .iter()
        .map(|set| {
            let npvs = scenario_npvs(set, valuation_year, rate);
            let mut acc = 0.0;
            let cumulative_prob = set
                .scenarios
                .iter()
                .map(|sc| {
                    acc += sc.probability;
                    acc
                })
                .collect();
            AssetDraw {
                asset_id: &set.asset_id,
                cumulative_prob,
                npvs,
            }
        })
        .collect();

    let mut samples = Vec::with_capacity(n_sims as usize);
    for replicate in 0..n_sims as u64 {
        let mut total = 0.0;
        for asset in &per_asset {
            let idx = if asset.npvs.len() == 1 {
                0
            } else {
                let u = uniform01(&mut substream(seed, asset.asset_id, replicate));
                asset
                    .cumulative_prob
                    .iter()
                    .position(|&c| u < c)
                    .unwrap_or(asset.npvs.len() - 1)
            };
            total += asset.npvs[idx];
        }
        samples.push(total);
    }

    let mut sorted = samples.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    // The true mean lies in [min, max]; the clamp strips pure summation
    // rounding so a degenerate sample set yields an exactly zero-width
    // interval around it.
    let mean = (samples.iter().sum::<f64>() / samples.len() as f64)
        .clamp(sorted[0], sorted[sorted.len() - 1]);
    let ci_low = percentile(&sorted, 0.025);
    let ci_high = percentile(&sorted, 0.975);
    Ok(ValuationResult {
        samples,
        mean,
        ci_low,
        ci_high,
        n_sims,
        seed,
    })
}

/// Implied pre-revenue portfolio value from the market-cap identity:
/// market cap = current assets + pre-revenue + post-revenue + cash - liabilities.
pub fn implied_prerevenue(balance: &BalanceSheet, post_revenue_npv: f64) -> f64 {
    balance.market_cap - balance.current_assets - post_revenue_npv - balance.cash_on_hand
        + balance.total_liabilities
}
