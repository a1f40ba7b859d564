//! Saturation-timing scenarios for assets that have not yet saturated.
//!
//! The lag between the end of the observed series and the saturation
//! mid-cycle is given an exponential prior truncated at the IP-expiry
//! window. Candidate saturation years are enumerated annually; each carries
//! the CDF mass of its unit lag interval, a forecast path, and a cumulative
//! sales figure.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand_core::RngCore;

use crate::curve::eval_curve;
use crate::domain::{AssetRecord, RunConfig, SalesPoint, TsOrientation};
use crate::fit::FitResult;
use crate::num;
use crate::rng::uniform01;

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    InvalidBound { rate: f64, upper: f64 },
    AlreadySaturated { asset_id: String },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::InvalidBound { rate, upper } => {
                write!(
                    f,
                    "invalid truncated-exponential bound: rate={rate}, upper={upper}"
                )
            }
            ScenarioError::AlreadySaturated { asset_id } => {
                write!(f, "asset {asset_id} is already saturated")
            }
        }
    }
}

impl core::error::Error for ScenarioError {}

/// One hypothesized saturation year with its probability, forecast path,
/// and cumulative (historical + forecast) sales.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub t_s_year: i32,
    pub probability: f64,
    /// Forecast (year, USD millions) for years after the observed series.
    pub path: Vec<(i32, f64)>,
    pub cumulative_musd: f64,
}

/// All scenarios for one asset plus the probability-weighted expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub asset_id: String,
    pub last_observed_year: i32,
    pub scenarios: Vec<Scenario>,
    pub expected_cumulative_musd: f64,
}

/// Inverse CDF of the exponential(rate) distribution truncated to
/// [0, upper], evaluated at u in [0, 1].
pub fn trunc_exp_inv_cdf(u: f64, rate: f64, upper: f64) -> f64 {
    -num::ln(1.0 - u * (1.0 - num::exp(-rate * upper))) / rate
}

/// Draw from the truncated exponential via inverse-CDF sampling.
pub fn sample_trunc_exp<R: RngCore>(
    rng: &mut R,
    rate: f64,
    upper: f64,
) -> Result<f64, ScenarioError> {
    if upper.is_nan() || upper <= 0.0 || rate.is_nan() || rate <= 0.0 {
        return Err(ScenarioError::InvalidBound { rate, upper });
    }
    Ok(trunc_exp_inv_cdf(uniform01(rng), rate, upper))
}

/// Enumerate candidate saturation years with their probabilities, sorted by
/// year. Lag interval d gets the truncated-exponential mass of [d, d+1).
///
/// When IP expiry does not extend past the observed series there is no
/// future window: the sole scenario sits at the last observed year with
/// probability 1.
pub fn scenario_distribution(
    fit: &FitResult,
    asset: &AssetRecord,
    config: &RunConfig,
) -> Result<Vec<(i32, f64)>, ScenarioError> {
    if fit.saturated {
        return Err(ScenarioError::AlreadySaturated {
            asset_id: asset.asset_id.clone(),
        });
    }
    let last = asset.last_sales_year();
    let ip = asset.ip_expiry_year;
    if ip <= last {
        return Ok(alloc::vec![(last, 1.0)]);
    }
    let k = (ip - last + 1) as usize;
    let rate = config.lambda_rate;
    let denom = 1.0 - num::exp(-rate * k as f64);
    let mut masses: Vec<f64> = (0..k)
        .map(|d| {
            let d = d as f64;
            (num::exp(-rate * d) - num::exp(-rate * (d + 1.0))) / denom
        })
        .collect();
    let total: f64 = masses.iter().sum();
    for m in &mut masses {
        *m /= total;
    }
    let mut out: Vec<(i32, f64)> = match config.ts_orientation {
        TsOrientation::ForwardFromLast => masses
            .iter()
            .enumerate()
            .map(|(d, &p)| (last + d as i32, p))
            .collect(),
        TsOrientation::BackwardFromIp => masses
            .iter()
            .enumerate()
            .map(|(d, &p)| (ip - d as i32, p))
            .collect(),
    };
    out.sort_by_key(|&(year, _)| year);
    Ok(out)
}

/// Forecast the years after the observed series with the fitted shape and
/// the mid-cycle pinned at `t_s_year`. The path stops at the configured
/// horizon or once the curve falls below the floor fraction of s.
pub fn forecast_path(
    fit: &FitResult,
    t_s_year: i32,
    asset: &AssetRecord,
    config: &RunConfig,
) -> Vec<(i32, f64)> {
    let first = asset.first_sales_year();
    let last = asset.last_sales_year();
    let params = fit.params.with_mid_cycle((t_s_year - first) as f64);
    let floor = config.forecast_floor_fraction * params.s;
    let mut path = Vec::new();
    for i in 1..=config.max_horizon_years {
        let year = last + i as i32;
        let v = eval_curve(&params, (year - first) as f64);
        if v < floor {
            break;
        }
        path.push((year, v));
    }
    path
}

/// Historical plus forecast sales for one scenario, USD millions.
pub fn cumulative_sales(historical: &[SalesPoint], path: &[(i32, f64)]) -> f64 {
    let hist: f64 = historical.iter().map(|p| p.revenue_musd).sum();
    let fut: f64 = path.iter().map(|&(_, v)| v).sum();
    hist + fut
}

/// Probability-weighted expectation over (probability, cumulative) pairs.
pub fn expected_cumulative(weighted: &[(f64, f64)]) -> f64 {
    weighted.iter().map(|&(p, c)| p * c).sum()
}

/// Build the full scenario set for one fitted asset.
///
/// A saturated asset gets a single certainty scenario at its detected
/// mid-cycle year; anything else gets the enumerated distribution.
pub fn build_scenarios(
    fit: &FitResult,
    asset: &AssetRecord,
    config: &RunConfig,
) -> Result<ScenarioSet, ScenarioError> {
    let last = asset.last_sales_year();
    let distribution: Vec<(i32, f64)> = if fit.saturated {
        let year = fit
            .saturation_year
            .expect("saturated fit carries a saturation year");
        alloc::vec![(year, 1.0)]
    } else {
        scenario_distribution(fit, asset, config)?
    };
    let scenarios: Vec<Scenario> = distribution
        .into_iter()
        .map(|(t_s_year, probability)| {
            let path = forecast_path(fit, t_s_year, asset, config);
            let cumulative_musd = cumulative_sales(&asset.sales, &path);
            Scenario {
                t_s_year,
                probability,
                path,
                cumulative_musd,
            }
        })
        .collect();
    let weighted: Vec<(f64, f64)> = scenarios
        .iter()
        .map(|sc| (sc.probability, sc.cumulative_musd))
        .collect();
    Ok(ScenarioSet {
        asset_id: asset.asset_id.clone(),
        last_observed_year: last,
        scenarios,
        expected_cumulative_musd: expected_cumulative(&weighted),
    })
}
