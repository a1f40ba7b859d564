//! Report file schemas and atomic writers.
//!
//! JSON reports are written pretty-printed with shortest-round-trip floats;
//! CSV reports use fixed decimal formatting. Both are byte-deterministic for
//! identical inputs. All writes go through a temp file in the target
//! directory followed by a rename, so a failed command never leaves a
//! partial report behind.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use postrev_core::analysis::{RegressionReport, ValidationRow};
use postrev_core::scenario::ScenarioSet;
use postrev_core::valuation::ValuationResult;

/// One fitted asset in `fits.json`. `t_s` is in offset years from
/// `first_sales_year` and is null until the asset saturates.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FitRow {
    pub asset_id: String,
    pub s: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub t_s: Option<f64>,
    pub saturated: bool,
    pub sse: f64,
    pub converged: bool,
    pub first_sales_year: i32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScenarioRow {
    pub t_s_year: i32,
    pub probability: f64,
    pub cumulative_musd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AssetScenarios {
    pub asset_id: String,
    pub scenarios: Vec<ScenarioRow>,
    pub expected_cumulative_musd: f64,
}

impl AssetScenarios {
    pub fn from_set(set: &ScenarioSet) -> Self {
        AssetScenarios {
            asset_id: set.asset_id.clone(),
            scenarios: set
                .scenarios
                .iter()
                .map(|sc| ScenarioRow {
                    t_s_year: sc.t_s_year,
                    probability: sc.probability,
                    cumulative_musd: sc.cumulative_musd,
                })
                .collect(),
            expected_cumulative_musd: set.expected_cumulative_musd,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ValuationReport {
    pub mean_musd: f64,
    pub ci_low_musd: f64,
    pub ci_high_musd: f64,
    pub n_sims: u32,
    pub seed: u64,
    pub per_asset_expected_npv: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub implied_prerevenue_musd: Option<f64>,
}

impl ValuationReport {
    pub fn new(result: &ValuationResult, per_asset: BTreeMap<String, f64>) -> Self {
        ValuationReport {
            mean_musd: result.mean,
            ci_low_musd: result.ci_low,
            ci_high_musd: result.ci_high,
            n_sims: result.n_sims,
            seed: result.seed,
            per_asset_expected_npv: per_asset,
            implied_prerevenue_musd: None,
        }
    }
}

/// Write bytes atomically: temp file in the destination directory, then
/// rename over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating directory {}", dir.display()))?;
    }
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir),
        None => tempfile::NamedTempFile::new(),
    }
    .with_context(|| format!("creating temp file next to {}", path.display()))?;
    tmp.write_all(bytes)
        .with_context(|| format!("writing {}", path.display()))?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_fits(path: &Path) -> Result<Vec<FitRow>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let rows: Vec<FitRow> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(rows)
}

/// `validation.csv`: per-asset rows plus one aggregate `portfolio` row per
/// fraction. Monetary columns are billions to three decimals.
pub fn write_validation_csv(path: &Path, rows: &[ValidationRow]) -> Result<()> {
    let mut out = String::from("asset_id,fraction,predicted_busd,actual_busd,diff_busd,pct_diff\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.3},{:.3},{:.3},{:.3}\n",
            r.asset_id,
            r.fraction,
            r.predicted_total / 1000.0,
            r.actual_total / 1000.0,
            r.difference / 1000.0,
            r.pct_difference
        ));
    }
    write_atomic(path, out.as_bytes())
}

/// Aggregate a fraction's rows into the portfolio row: summed differences,
/// percentage against summed actuals.
pub fn portfolio_row(fraction: f64, rows: &[&ValidationRow]) -> ValidationRow {
    let predicted_total: f64 = rows.iter().map(|r| r.predicted_total).sum();
    let actual_total: f64 = rows.iter().map(|r| r.actual_total).sum();
    let difference = predicted_total - actual_total;
    ValidationRow {
        asset_id: "portfolio".to_string(),
        fraction,
        predicted_total,
        actual_total,
        difference,
        pct_difference: if actual_total > 0.0 {
            100.0 * difference / actual_total
        } else {
            0.0
        },
    }
}

/// `posthoc.csv`: one row per regression term.
pub fn write_posthoc_csv(path: &Path, reports: &[RegressionReport]) -> Result<()> {
    let mut out = String::from("regression,term,coefficient,std_err,t_stat,p_value\n");
    for rep in reports {
        for term in &rep.terms {
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{:.6}\n",
                rep.outcome_name,
                term.name,
                term.coefficient,
                term.standard_error,
                term.t_statistic,
                term.p_value
            ));
        }
    }
    write_atomic(path, out.as_bytes())
}

/// `qq_<regression>.csv` next to the posthoc report.
pub fn write_qq_csv(dir: &Path, report: &RegressionReport) -> Result<()> {
    let mut out = String::from("theoretical,sample\n");
    for &(theo, sample) in &report.qq_points {
        out.push_str(&format!("{:.6},{:.6}\n", theo, sample));
    }
    write_atomic(
        &dir.join(format!("qq_{}.csv", report.outcome_name)),
        out.as_bytes(),
    )
}

/// Optional raw sample dump for the valuation command.
pub fn write_samples_csv(path: &Path, samples: &[f64]) -> Result<()> {
    let mut out = String::from("replicate,npv_musd\n");
    for (i, v) in samples.iter().enumerate() {
        out.push_str(&format!("{},{:.6}\n", i, v));
    }
    write_atomic(path, out.as_bytes())
}
