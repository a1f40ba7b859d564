//! Orchestration shared by the commands: fitting a whole portfolio,
//! rehydrating fits from `fits.json`, and building scenario sets.

use std::collections::BTreeMap;

use anyhow::{anyhow, Result};

use postrev_core::curve::CurveParams;
use postrev_core::domain::{AssetRecord, RunConfig};
use postrev_core::fit::{fit_full, FitResult};
use postrev_core::scenario::{build_scenarios, ScenarioSet};
use postrev_core::valuation::expected_npv;

use crate::report::FitRow;

/// An asset paired with its fit.
pub type FittedAsset = (AssetRecord, FitResult);

/// Fit every asset. With `skip_errors` the failures are reported back as
/// (asset_id, message) pairs instead of aborting.
#[allow(clippy::type_complexity)]
pub fn fit_portfolio(
    assets: &[AssetRecord],
    config: &RunConfig,
    skip_errors: bool,
) -> Result<(Vec<FittedAsset>, Vec<(String, String)>)> {
    let mut fitted = Vec::new();
    let mut failures = Vec::new();
    for asset in assets {
        match fit_full(asset, config) {
            Ok(fit) => fitted.push((asset.clone(), fit)),
            Err(e) if skip_errors => failures.push((asset.asset_id.clone(), e.to_string())),
            Err(e) => return Err(anyhow!("fit failed for {}: {e}", asset.asset_id)),
        }
    }
    Ok((fitted, failures))
}

pub fn to_fit_row(asset: &AssetRecord, fit: &FitResult) -> FitRow {
    FitRow {
        asset_id: asset.asset_id.clone(),
        s: fit.params.s,
        beta0: fit.params.beta0,
        beta1: fit.params.beta1,
        t_s: fit.params.t_s,
        saturated: fit.saturated,
        sse: fit.sse,
        converged: fit.converged,
        first_sales_year: asset.first_sales_year(),
    }
}

/// Rebuild a `FitResult` from a persisted row plus the asset it belongs to.
pub fn from_fit_row(asset: &AssetRecord, row: &FitRow) -> FitResult {
    let mut params = CurveParams::new(row.s, row.beta0, row.beta1);
    params.t_s = row.t_s;
    let offsets = asset.series_offsets();
    let mut t_max = 0.0;
    let mut peak = f64::NEG_INFINITY;
    for &(t, y) in &offsets {
        if y > peak {
            peak = y;
            t_max = t;
        }
    }
    FitResult {
        params,
        sse: row.sse,
        n_iterations: 0,
        converged: row.converged,
        t_max,
        saturated: row.saturated,
        saturation_year: row
            .t_s
            .filter(|_| row.saturated)
            .map(|ts| row.first_sales_year + ts as i32),
        sse_trace: Vec::new(),
    }
}

/// Join persisted fit rows with loaded assets, sorted by asset id.
pub fn join_fits(assets: &[AssetRecord], rows: &[FitRow]) -> Result<Vec<FittedAsset>> {
    let by_id: BTreeMap<&str, &AssetRecord> =
        assets.iter().map(|a| (a.asset_id.as_str(), a)).collect();
    let mut joined = Vec::with_capacity(rows.len());
    for row in rows {
        let asset = by_id
            .get(row.asset_id.as_str())
            .ok_or_else(|| anyhow!("fits.json references unknown asset {}", row.asset_id))?;
        joined.push(((*asset).clone(), from_fit_row(asset, row)));
    }
    joined.sort_by(|a, b| a.0.asset_id.cmp(&b.0.asset_id));
    Ok(joined)
}

/// Scenario sets for every fitted asset, sorted by asset id.
pub fn scenario_sets(fitted: &[FittedAsset], config: &RunConfig) -> Result<Vec<ScenarioSet>> {
    let mut sets = Vec::with_capacity(fitted.len());
    for (asset, fit) in fitted {
        let set = build_scenarios(fit, asset, config)
            .map_err(|e| anyhow!("scenarios failed for {}: {e}", asset.asset_id))?;
        sets.push(set);
    }
    sets.sort_by(|a, b| a.asset_id.cmp(&b.asset_id));
    Ok(sets)
}

/// Deterministic per-asset expected NPV map for the valuation report.
pub fn per_asset_expected_npv(
    sets: &[ScenarioSet],
    valuation_year: i32,
    rate: f64,
) -> BTreeMap<String, f64> {
    sets.iter()
        .map(|set| {
            (
                set.asset_id.clone(),
                expected_npv(set, valuation_year, rate),
            )
        })
        .collect()
}
