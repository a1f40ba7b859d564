//! Command definitions and the pipeline behind each verb.
//!
//! Exit codes: 2 for input or validation failures (clap uses the same code
//! for usage errors), 3 for fit or simulation failures.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

use postrev_core::analysis::{posthoc_features, validate_asset, AnalysisError, ValidationRow};
use postrev_core::domain::RunConfig;
use postrev_core::valuation::{implied_prerevenue, portfolio_valuation_year, simulate_portfolio};

use crate::ingest;
use crate::pipeline;
use crate::report;
use crate::svg;

#[derive(Parser, Debug)]
#[command(
    name = "postrev",
    version,
    about = "Sales-cycle fitting, scenario forecasting, and Monte Carlo NPV valuation for post-revenue pharmaceutical assets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit the sales curve to every asset and write fits.json
    Fit {
        #[arg(long)]
        assets: PathBuf,
        #[arg(long)]
        sales: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Keep going when an asset cannot be fitted
        #[arg(long)]
        skip_errors: bool,
    },
    /// Build saturation scenarios from fits.json and write scenarios.json
    Forecast {
        #[arg(long)]
        fits: PathBuf,
        #[arg(long)]
        assets: PathBuf,
        #[arg(long)]
        sales: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Holdout backtest on saturated assets and write validation.csv
    Validate {
        #[arg(long)]
        assets: PathBuf,
        #[arg(long)]
        sales: PathBuf,
        /// Holdout fractions of peak revenue
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,1.0")]
        fractions: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Monte Carlo portfolio valuation; writes valuation.json
    Value {
        #[arg(long)]
        fits: PathBuf,
        #[arg(long)]
        assets: PathBuf,
        #[arg(long)]
        sales: PathBuf,
        /// Number of Monte Carlo realizations (overrides config)
        #[arg(long)]
        sims: Option<u32>,
        /// RNG seed; stochastic commands take no implicit entropy
        #[arg(long)]
        seed: u64,
        /// Discount rate (overrides config)
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Balance-sheet CSV; adds implied_prerevenue_musd to the report
        #[arg(long)]
        balance: Option<PathBuf>,
        /// Also dump raw samples to this CSV
        #[arg(long)]
        samples: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Post-hoc feature regressions; writes posthoc.csv and qq_*.csv
    Posthoc {
        #[arg(long)]
        fits: PathBuf,
        #[arg(long)]
        assets: PathBuf,
        #[arg(long)]
        sales: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Per-asset SVG plots plus portfolio_hist.svg
    Plot {
        #[arg(long)]
        fits: PathBuf,
        #[arg(long)]
        assets: PathBuf,
        #[arg(long)]
        sales: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// RNG seed for the histogram simulation
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        sims: Option<u32>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Failure classified by exit code.
#[derive(Debug)]
pub enum CmdError {
    /// Bad inputs: missing or malformed files, invalid configuration. Exit 2.
    Input(anyhow::Error),
    /// The computation itself failed (fit, scenarios, simulation). Exit 3.
    Compute(anyhow::Error),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Input(_) => 2,
            CmdError::Compute(_) => 3,
        }
    }
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Input(e) | CmdError::Compute(e) => write!(f, "{e:#}"),
        }
    }
}

fn input<T>(r: Result<T, impl Into<anyhow::Error>>) -> Result<T, CmdError> {
    r.map_err(|e| CmdError::Input(e.into()))
}

fn compute<T>(r: Result<T, impl Into<anyhow::Error>>) -> Result<T, CmdError> {
    r.map_err(|e| CmdError::Compute(e.into()))
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, CmdError> {
    match path {
        Some(p) => input(ingest::load_config(p)),
        None => Ok(RunConfig::default()),
    }
}

pub fn run(cli: Cli) -> Result<(), CmdError> {
    match cli.command {
        Command::Fit {
            assets,
            sales,
            out,
            config,
            skip_errors,
        } => cmd_fit(&assets, &sales, &out, &config, skip_errors),
        Command::Forecast {
            fits,
            assets,
            sales,
            out,
            config,
        } => cmd_forecast(&fits, &assets, &sales, &out, &config),
        Command::Validate {
            assets,
            sales,
            fractions,
            out,
            config,
        } => cmd_validate(&assets, &sales, &fractions, &out, &config),
        Command::Value {
            fits,
            assets,
            sales,
            sims,
            seed,
            rate,
            out,
            balance,
            samples,
            config,
        } => cmd_value(
            &fits, &assets, &sales, sims, seed, rate, &out, &balance, &samples, &config,
        ),
        Command::Posthoc {
            fits,
            assets,
            sales,
            out,
            config,
        } => cmd_posthoc(&fits, &assets, &sales, &out, &config),
        Command::Plot {
            fits,
            assets,
            sales,
            out_dir,
            seed,
            sims,
            config,
        } => cmd_plot(&fits, &assets, &sales, &out_dir, seed, sims, &config),
    }
}

fn cmd_fit(
    assets_path: &Path,
    sales_path: &Path,
    out: &Path,
    config_path: &Option<PathBuf>,
    skip_errors: bool,
) -> Result<(), CmdError> {
    let config = load_config(config_path)?;
    let assets = input(ingest::load_assets(assets_path, sales_path))?;
    let (fitted, failures) = compute(pipeline::fit_portfolio(&assets, &config, skip_errors))?;
    for (asset_id, message) in &failures {
        eprintln!("skipped {asset_id}: {message}");
    }
    let rows: Vec<report::FitRow> = fitted
        .iter()
        .map(|(asset, fit)| pipeline::to_fit_row(asset, fit))
        .collect();
    compute(report::write_json(out, &rows))?;
    for (asset, fit) in &fitted {
        println!(
            "{} s={:.3}B ramp_rate={:.3} saturated={}",
            asset.asset_id,
            fit.params.s / 1000.0,
            fit.params.ramp_rate(),
            fit.saturated
        );
    }
    Ok(())
}

fn cmd_forecast(
    fits_path: &Path,
    assets_path: &Path,
    sales_path: &Path,
    out: &Path,
    config_path: &Option<PathBuf>,
) -> Result<(), CmdError> {
    let config = load_config(config_path)?;
    let assets = input(ingest::load_assets(assets_path, sales_path))?;
    let rows = input(report::read_fits(fits_path))?;
    let fitted = input(pipeline::join_fits(&assets, &rows))?;
    let sets = compute(pipeline::scenario_sets(&fitted, &config))?;
    let out_rows: Vec<report::AssetScenarios> =
        sets.iter().map(report::AssetScenarios::from_set).collect();
    compute(report::write_json(out, &out_rows))?;
    for set in &sets {
        println!(
            "{} scenarios={} expected_cumulative={:.3}B",
            set.asset_id,
            set.scenarios.len(),
            set.expected_cumulative_musd / 1000.0
        );
    }
    Ok(())
}

fn cmd_validate(
    assets_path: &Path,
    sales_path: &Path,
    fractions: &[f64],
    out: &Path,
    config_path: &Option<PathBuf>,
) -> Result<(), CmdError> {
    let config = load_config(config_path)?;
    for &fraction in fractions {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(CmdError::Input(anyhow!(
                "fraction {fraction} outside (0, 1]"
            )));
        }
    }
    let assets = input(ingest::load_assets(assets_path, sales_path))?;
    let mut rows: Vec<ValidationRow> = Vec::new();
    for asset in &assets {
        for &fraction in fractions {
            match validate_asset(asset, fraction, &config) {
                Ok(row) => rows.push(row),
                Err(AnalysisError::NotSaturated { asset_id }) => {
                    eprintln!("skipped {asset_id}: not saturated, excluded from the backtest");
                    break;
                }
                Err(AnalysisError::Fit(e)) => {
                    eprintln!("skipped {} at fraction {fraction}: {e}", asset.asset_id);
                }
                Err(e) => return Err(CmdError::Compute(anyhow!("{}: {e}", asset.asset_id))),
            }
        }
    }
    if rows.is_empty() {
        return Err(CmdError::Compute(anyhow!(
            "no saturated assets could be backtested"
        )));
    }
    rows.sort_by(|a, b| {
        a.asset_id
            .cmp(&b.asset_id)
            .then(a.fraction.partial_cmp(&b.fraction).unwrap())
    });
    let mut all = rows.clone();
    for &fraction in fractions {
        let members: Vec<&ValidationRow> = rows.iter().filter(|r| r.fraction == fraction).collect();
        if members.is_empty() {
            continue;
        }
        let agg = report::portfolio_row(fraction, &members);
        println!(
            "portfolio fraction={} diff={:.3}B pct={:.2}%",
            fraction,
            agg.difference / 1000.0,
            agg.pct_difference
        );
        all.push(agg);
    }
    compute(report::write_validation_csv(out, &all))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_value(
    fits_path: &Path,
    assets_path: &Path,
    sales_path: &Path,
    sims: Option<u32>,
    seed: u64,
    rate: Option<f64>,
    out: &Path,
    balance_path: &Option<PathBuf>,
    samples_path: &Option<PathBuf>,
    config_path: &Option<PathBuf>,
) -> Result<(), CmdError> {
    let mut config = load_config(config_path)?;
    if let Some(n) = sims {
        if n == 0 {
            return Err(CmdError::Input(anyhow!("--sims must be positive")));
        }
        config.n_sims = n;
    }
    config.seed = seed;
    if let Some(r) = rate {
        // The explicit flag gets the full NPV domain (r > -1), so rate 0
        // exercises the undiscounted identity; file configs stay in (0, 1).
        if !r.is_finite() || r <= -1.0 {
            return Err(CmdError::Input(anyhow!("--rate must be greater than -1")));
        }
        config.discount_rate = r;
    }
    let assets = input(ingest::load_assets(assets_path, sales_path))?;
    let rows = input(report::read_fits(fits_path))?;
    let fitted = input(pipeline::join_fits(&assets, &rows))?;
    let sets = compute(pipeline::scenario_sets(&fitted, &config))?;
    let result = compute(simulate_portfolio(&sets, &config))?;
    let valuation_year =
        portfolio_valuation_year(&sets).expect("non-empty portfolio has a valuation year");
    let per_asset = pipeline::per_asset_expected_npv(&sets, valuation_year, config.discount_rate);
    let mut report_out = report::ValuationReport::new(&result, per_asset);
    if let Some(bp) = balance_path {
        let balance = input(ingest::load_balance(bp))?;
        report_out.implied_prerevenue_musd = Some(implied_prerevenue(&balance, result.mean));
    }
    compute(report::write_json(out, &report_out))?;
    if let Some(sp) = samples_path {
        compute(report::write_samples_csv(sp, &result.samples))?;
    }
    println!(
        "portfolio NPV mean {:.3}B, 95% credible interval [{:.3}, {:.3}]B (sims={}, seed={})",
        result.mean / 1000.0,
        result.ci_low / 1000.0,
        result.ci_high / 1000.0,
        result.n_sims,
        result.seed
    );
    if let Some(pre) = report_out.implied_prerevenue_musd {
        println!("implied pre-revenue value {:.3}B", pre / 1000.0);
    }
    Ok(())
}

fn cmd_posthoc(
    fits_path: &Path,
    assets_path: &Path,
    sales_path: &Path,
    out: &Path,
    config_path: &Option<PathBuf>,
) -> Result<(), CmdError> {
    let config = load_config(config_path)?;
    let assets = input(ingest::load_assets(assets_path, sales_path))?;
    let rows = input(report::read_fits(fits_path))?;
    let fitted = input(pipeline::join_fits(&assets, &rows))?;
    let (asset_vec, fit_vec): (Vec<_>, Vec<_>) = fitted.into_iter().unzip();
    let reports = compute(posthoc_features(&asset_vec, &fit_vec, &config))?;
    compute(report::write_posthoc_csv(out, &reports))?;
    let dir = out.parent().unwrap_or_else(|| Path::new("."));
    for rep in &reports {
        compute(report::write_qq_csv(dir, rep))?;
        for term in rep.terms.iter().filter(|t| t.name != "intercept") {
            println!(
                "{} {} coef={:.4} p={:.4}",
                rep.outcome_name, term.name, term.coefficient, term.p_value
            );
        }
    }
    Ok(())
}

fn cmd_plot(
    fits_path: &Path,
    assets_path: &Path,
    sales_path: &Path,
    out_dir: &Path,
    seed: u64,
    sims: Option<u32>,
    config_path: &Option<PathBuf>,
) -> Result<(), CmdError> {
    let mut config = load_config(config_path)?;
    config.seed = seed;
    if let Some(n) = sims {
        config.n_sims = n;
    }
    input(config.validate())?;
    let assets = input(ingest::load_assets(assets_path, sales_path))?;
    let rows = input(report::read_fits(fits_path))?;
    let fitted = input(pipeline::join_fits(&assets, &rows))?;
    let sets = compute(pipeline::scenario_sets(&fitted, &config))?;
    input(
        std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display())),
    )?;
    let by_id: BTreeMap<&str, &postrev_core::scenario::ScenarioSet> =
        sets.iter().map(|s| (s.asset_id.as_str(), s)).collect();
    for (asset, fit) in &fitted {
        let set = by_id
            .get(asset.asset_id.as_str())
            .expect("scenario set exists for every fitted asset");
        let svg_text = svg::asset_plot(asset, fit, set);
        compute(report::write_atomic(
            &out_dir.join(format!("{}.svg", asset.asset_id)),
            svg_text.as_bytes(),
        ))?;
        println!(
            "wrote {}.svg ({} facets)",
            asset.asset_id,
            set.scenarios.len()
        );
    }
    let result = compute(simulate_portfolio(&sets, &config))?;
    let hist = svg::portfolio_histogram(&result.samples, result.mean);
    compute(report::write_atomic(
        &out_dir.join("portfolio_hist.svg"),
        hist.as_bytes(),
    ))?;
    println!("wrote portfolio_hist.svg");
    Ok(())
}
