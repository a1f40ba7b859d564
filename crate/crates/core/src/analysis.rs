//! Holdout validation of the forecaster on saturated assets, and post-hoc
//! OLS regressions of fit residuals and uptake speed on asset features.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::dist::{normal_quantile, t_cdf};
use crate::domain::{AssetRecord, Category, RunConfig};
use crate::fit::{fit_full, fit_growth, FitError, FitResult};
use crate::num;
use crate::scenario::{forecast_path, scenario_distribution, ScenarioError};

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisError {
    NotSaturated { asset_id: String },
    FractionNeverReached { asset_id: String, fraction: f64 },
    SingularDesign,
    InsufficientData { n: usize, p: usize },
    Fit(FitError),
    Scenario(ScenarioError),
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::NotSaturated { asset_id } => {
                write!(f, "asset {asset_id} has not reached saturation")
            }
            AnalysisError::FractionNeverReached { asset_id, fraction } => {
                write!(
                    f,
                    "asset {asset_id}: no year reaches fraction {fraction} of peak"
                )
            }
            AnalysisError::SingularDesign => write!(f, "singular regression design"),
            AnalysisError::InsufficientData { n, p } => {
                write!(f, "{n} observations cannot support {p} regression terms")
            }
            AnalysisError::Fit(e) => write!(f, "fit failed: {e}"),
            AnalysisError::Scenario(e) => write!(f, "scenario construction failed: {e}"),
        }
    }
}

impl core::error::Error for AnalysisError {}

impl From<FitError> for AnalysisError {
    fn from(e: FitError) -> Self {
        AnalysisError::Fit(e)
    }
}

impl From<ScenarioError> for AnalysisError {
    fn from(e: ScenarioError) -> Self {
        AnalysisError::Scenario(e)
    }
}

/// One holdout comparison: prediction from a truncated history against the
/// recorded total.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub asset_id: String,
    pub fraction: f64,
    pub predicted_total: f64,
    pub actual_total: f64,
    /// predicted - actual, USD millions.
    pub difference: f64,
    /// 100 * difference / actual_total.
    pub pct_difference: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTerm {
    pub name: String,
    pub coefficient: f64,
    pub standard_error: f64,
    pub t_statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionReport {
    pub outcome_name: String,
    pub terms: Vec<RegressionTerm>,
    pub n_observations: usize,
    pub residuals: Vec<f64>,
    /// (standard normal quantile at (i - 0.5)/n, sorted standardized residual).
    pub qq_points: Vec<(f64, f64)>,
}

/// Truncate a saturated asset's history at the first year whose revenue
/// reaches `fraction` of the observed peak; `fraction = 1.0` truncates at the
/// detected saturation year. The threshold year is kept.
pub fn truncate_at_fraction(
    asset: &AssetRecord,
    full_fit: &FitResult,
    fraction: f64,
) -> Result<AssetRecord, AnalysisError> {
    if !full_fit.saturated {
        return Err(AnalysisError::NotSaturated {
            asset_id: asset.asset_id.clone(),
        });
    }
    let cut_year = if fraction >= 1.0 {
        full_fit
            .saturation_year
            .expect("saturated fit carries a saturation year")
    } else {
        let threshold = fraction * asset.max_revenue();
        asset
            .sales
            .iter()
            .find(|p| p.revenue_musd >= threshold)
            .map(|p| p.year)
            .ok_or(AnalysisError::FractionNeverReached {
                asset_id: asset.asset_id.clone(),
                fraction,
            })?
    };
    let mut truncated = asset.clone();
    truncated.sales.retain(|p| p.year <= cut_year);
    Ok(truncated)
}

/// Backtest one asset at one holdout fraction.
///
/// The history is truncated, refit with saturation deliberately ignored, and
/// scenario-forecast out to the last actually observed year; the
/// probability-weighted total is compared against the recorded total.
pub fn validate_asset(
    asset: &AssetRecord,
    fraction: f64,
    config: &RunConfig,
) -> Result<ValidationRow, AnalysisError> {
    let full_fit = fit_full(asset, config)?;
    let truncated = truncate_at_fraction(asset, &full_fit, fraction)?;
    let offsets = truncated.series_offsets();
    let mut peak = 0usize;
    let mut peak_y = f64::NEG_INFINITY;
    for (i, &(_, y)) in offsets.iter().enumerate() {
        if y > peak_y {
            peak_y = y;
            peak = i;
        }
    }
    if peak + 1 < 3 {
        return Err(AnalysisError::Fit(FitError::NotEnoughPoints {
            needed: 3,
            got: peak + 1,
        }));
    }
    // Pretend the truncated asset has not saturated; saturation timing comes
    // from the scenario prior instead.
    let refit = fit_growth(
        &offsets[..=peak],
        config.saturation_fit_tolerance,
        config.max_fit_iterations,
    )?;
    let last_actual_year = asset.last_sales_year();
    let truncated_total: f64 = truncated.sales.iter().map(|p| p.revenue_musd).sum();
    let distribution = scenario_distribution(&refit, &truncated, config)?;
    let mut predicted_total = 0.0;
    for (t_s_year, probability) in distribution {
        let path = forecast_path(&refit, t_s_year, &truncated, config);
        let future: f64 = path
            .iter()
            .filter(|&&(year, _)| year <= last_actual_year)
            .map(|&(_, v)| v)
            .sum();
        predicted_total += probability * (truncated_total + future);
    }
    let actual_total: f64 = asset.sales.iter().map(|p| p.revenue_musd).sum();
    let difference = predicted_total - actual_total;
    let pct_difference = if actual_total > 0.0 {
        100.0 * difference / actual_total
    } else {
        0.0
    };
    Ok(ValidationRow {
        asset_id: asset.asset_id.clone(),
        fraction,
        predicted_total,
        actual_total,
        difference,
        pct_difference,
    })
}

/// Ordinary least squares with intercept-bearing design supplied as named
/// columns. Coefficients come from the normal equations (partial-pivot
/// solve), standard errors from sigma^2 (X'X)^-1, p-values from the
/// two-sided t distribution on n - p degrees of freedom.
#[allow(clippy::needless_range_loop)]
pub fn ols(
    outcome_name: &str,
    y: &[f64],
    terms: &[(&str, &[f64])],
) -> Result<RegressionReport, AnalysisError> {
    let n = y.len();
    let p = terms.len();
    if p == 0 || n <= p {
        return Err(AnalysisError::InsufficientData { n, p });
    }
    for (_, col) in terms {
        if col.len() != n {
            return Err(AnalysisError::InsufficientData { n, p });
        }
    }

    // Normal equations X'X beta = X'y.
    let mut xtx = Vec::with_capacity(p);
    for i in 0..p {
        let mut row = Vec::with_capacity(p);
        for j in 0..p {
            let mut acc = 0.0;
            for k in 0..n {
                acc += terms[i].1[k] * terms[j].1[k];
            }
            row.push(acc);
        }
        xtx.push(row);
    }
    let mut xty = Vec::with_capacity(p);
    for i in 0..p {
        let mut acc = 0.0;
        for k in 0..n {
            acc += terms[i].1[k] * y[k];
        }
        xty.push(acc);
    }

    let (beta, inv) = solve_and_invert(&xtx, &xty)?;

    let mut residuals = Vec::with_capacity(n);
    let mut rss = 0.0;
    for k in 0..n {
        let mut fitted = 0.0;
        for j in 0..p {
            fitted += beta[j] * terms[j].1[k];
        }
        let r = y[k] - fitted;
        rss += r * r;
        residuals.push(r);
    }
    let df = (n - p) as f64;
    let sigma2 = rss / df;

    let mut report_terms = Vec::with_capacity(p);
    for j in 0..p {
        let var = (sigma2 * inv[j][j]).max(0.0);
        let se = num::sqrt(var);
        let t_stat = if se > 0.0 {
            beta[j] / se
        } else if beta[j] == 0.0 {
            0.0
        } else if beta[j] > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        let p_value = (2.0 * (1.0 - t_cdf(t_stat.abs(), df))).clamp(0.0, 1.0);
        report_terms.push(RegressionTerm {
            name: terms[j].0.to_string(),
            coefficient: beta[j],
            standard_error: se,
            t_statistic: t_stat,
            p_value,
        });
    }

    let sigma = num::sqrt(sigma2);
    let mut standardized: Vec<f64> = residuals
        .iter()
        .map(|&r| if sigma > 0.0 { r / sigma } else { 0.0 })
        .collect();
    standardized.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let qq_points = standardized
        .iter()
        .enumerate()
        .map(|(i, &sr)| (normal_quantile((i as f64 + 0.5) / n as f64), sr))
        .collect();

    Ok(RegressionReport {
        outcome_name: outcome_name.to_string(),
        terms: report_terms,
        n_observations: n,
        residuals,
        qq_points,
    })
}

/// Solve A x = b and invert A (small symmetric positive-ish systems) by
/// Gauss-Jordan with partial pivoting.
#[allow(clippy::needless_range_loop, clippy::type_complexity)]
fn solve_and_invert(a: &[Vec<f64>], b: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), AnalysisError> {
    let p = b.len();
    let mut scale = 0.0f64;
    for row in a {
        for &v in row {
            scale = scale.max(v.abs());
        }
    }
    if scale == 0.0 {
        return Err(AnalysisError::SingularDesign);
    }
    // Augmented [A | I | b].
    let width = p + p + 1;
    let mut m: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut row = Vec::with_capacity(width);
            row.extend_from_slice(&a[i]);
            for j in 0..p {
                row.push(if i == j { 1.0 } else { 0.0 });
            }
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..p {
        let mut pivot = col;
        for row in col + 1..p {
            if m[row][col].abs() > m[pivot][col].abs() {
                pivot = row;
            }
        }
        if m[pivot][col].abs() < 1e-12 * scale {
            return Err(AnalysisError::SingularDesign);
        }
        m.swap(col, pivot);
        let d = m[col][col];
        for v in m[col].iter_mut() {
            *v /= d;
        }
        for row in 0..p {
            if row == col {
                continue;
            }
            let f = m[row][col];
            if f == 0.0 {
                continue;
            }
            for k in 0..width {
                let sub = f * m[col][k];
                m[row][k] -= sub;
            }
        }
    }
    let beta: Vec<f64> = (0..p).map(|i| m[i][width - 1]).collect();
    let inv: Vec<Vec<f64>> = (0..p).map(|i| m[i][p..2 * p].to_vec()).collect();
    Ok((beta, inv))
}

fn observed_saturation_year(asset: &AssetRecord, level_fraction: f64) -> i32 {
    let threshold = level_fraction * asset.max_revenue();
    asset
        .sales
        .iter()
        .find(|p| p.revenue_musd >= threshold)
        .map(|p| p.year)
        .unwrap_or_else(|| asset.last_sales_year())
}

/// The post-hoc regression battery.
///
/// Saturation residuals (observed peak minus fitted scale; observed minus
/// fitted saturation year) are regressed on trial count, category dummies
/// (Cancer and Immune against an Other reference; Infectious folds into the
/// reference), and condition count, over the saturated assets. Uptake speed
/// (raw beta1 and ramp_rate) is regressed on the category dummies over all
/// fitted assets.
pub fn posthoc_features(
    assets: &[AssetRecord],
    fits: &[FitResult],
    config: &RunConfig,
) -> Result<Vec<RegressionReport>, AnalysisError> {
    assert_eq!(assets.len(), fits.len(), "assets and fits must align");

    let saturated: Vec<usize> = (0..assets.len()).filter(|&i| fits[i].saturated).collect();

    let dummy = |idx: &[usize], cat: Category| -> Vec<f64> {
        idx.iter()
            .map(|&i| if assets[i].category == cat { 1.0 } else { 0.0 })
            .collect()
    };
    let ones = |k: usize| -> Vec<f64> { alloc::vec![1.0; k] };

    let mut reports = Vec::new();

    {
        let idx = &saturated;
        let k = idx.len();
        let residual_value: Vec<f64> = idx
            .iter()
            .map(|&i| assets[i].max_revenue() - fits[i].params.s)
            .collect();
        let residual_year: Vec<f64> = idx
            .iter()
            .map(|&i| {
                let observed =
                    observed_saturation_year(&assets[i], config.saturation_level_fraction);
                let fitted = fits[i]
                    .saturation_year
                    .expect("saturated fit carries a saturation year");
                (observed - fitted) as f64
            })
            .collect();
        let trials: Vec<f64> = idx
            .iter()
            .map(|&i| assets[i].n_phase3_trials as f64)
            .collect();
        let conditions: Vec<f64> = idx.iter().map(|&i| assets[i].n_conditions as f64).collect();
        let cancer = dummy(idx, Category::Cancer);
        let immune = dummy(idx, Category::Immune);
        let intercept = ones(k);

        for (outcome_name, y) in [
            ("residual_saturation_value", &residual_value),
            ("residual_saturation_year", &residual_year),
        ] {
            reports.push(ols(
                &alloc::format!("{outcome_name}_vs_trials"),
                y,
                &[("intercept", &intercept), ("n_phase3_trials", &trials)],
            )?);
            reports.push(ols(
                &alloc::format!("{outcome_name}_vs_category"),
                y,
                &[
                    ("intercept", &intercept),
                    ("cancer", &cancer),
                    ("immune", &immune),
                ],
            )?);
            reports.push(ols(
                &alloc::format!("{outcome_name}_vs_conditions"),
                y,
                &[("intercept", &intercept), ("n_conditions", &conditions)],
            )?);
        }
    }

    {
        let idx: Vec<usize> = (0..assets.len()).collect();
        let beta1: Vec<f64> = idx.iter().map(|&i| fits[i].params.beta1).collect();
        let ramp: Vec<f64> = idx.iter().map(|&i| fits[i].params.ramp_rate()).collect();
        let cancer = dummy(&idx, Category::Cancer);
        let immune = dummy(&idx, Category::Immune);
        let intercept = ones(idx.len());
        for (outcome_name, y) in [("beta1", &beta1), ("ramp_rate", &ramp)] {
            reports.push(ols(
                &alloc::format!("{outcome_name}_vs_category"),
                y,
                &[
                    ("intercept", &intercept),
                    ("cancer", &cancer),
                    ("immune", &immune),
                ],
            )?);
        }
    }

    Ok(reports)
}
