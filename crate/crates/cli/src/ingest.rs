//! Loading and validating assets, sales series, run configuration, and
//! balance-sheet inputs from files.
//!
//! File schemas:
//! - `assets.csv`: `asset_id,display_name,launch_year,ip_expiry_year,category,n_phase3_trials,n_conditions`
//! - `sales.csv`: `asset_id,year,revenue_musd`
//! - config: UTF-8 `key = value` lines, `#` comments, keys named after the
//!   `RunConfig` fields
//! - `balance.csv`: `market_cap_musd,current_assets_musd,cash_musd,total_liabilities_musd`

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use postrev_core::domain::{
    AssetRecord, Category, ConfigError, DomainError, RunConfig, SalesPoint, TsOrientation,
};
use postrev_core::valuation::BalanceSheet;

#[derive(Debug)]
pub enum IngestError {
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Csv {
        path: PathBuf,
        detail: String,
    },
    Parse {
        path: PathBuf,
        row: usize,
        detail: String,
    },
    /// A sales row references an asset_id absent from the metadata file.
    MissingAsset {
        asset_id: String,
        year: i32,
    },
    DuplicateAssetId {
        asset_id: String,
    },
    Domain(DomainError),
    Config(ConfigError),
}

impl fmt::Display for IngestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IngestError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            IngestError::Csv { path, detail } => write!(f, "{}: {detail}", path.display()),
            IngestError::Parse { path, row, detail } => {
                write!(f, "{} row {row}: {detail}", path.display())
            }
            IngestError::MissingAsset { asset_id, year } => {
                write!(f, "sales row ({asset_id}, {year}) has no matching asset")
            }
            IngestError::DuplicateAssetId { asset_id } => {
                write!(f, "asset_id {asset_id} appears twice in the asset file")
            }
            IngestError::Domain(e) => write!(f, "{e}"),
            IngestError::Config(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for IngestError {}

impl From<DomainError> for IngestError {
    fn from(e: DomainError) -> Self {
        IngestError::Domain(e)
    }
}

impl From<ConfigError> for IngestError {
    fn from(e: ConfigError) -> Self {
        IngestError::Config(e)
    }
}

fn field<'a>(
    record: &'a csv::StringRecord,
    headers: &csv::StringRecord,
    name: &str,
    path: &Path,
    row: usize,
) -> Result<&'a str, IngestError> {
    let idx = headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| IngestError::Csv {
            path: path.to_path_buf(),
            detail: format!("missing column `{name}`"),
        })?;
    record
        .get(idx)
        .map(str::trim)
        .ok_or_else(|| IngestError::Parse {
            path: path.to_path_buf(),
            row,
            detail: format!("missing value for `{name}`"),
        })
}

fn parse_as<T: std::str::FromStr>(
    raw: &str,
    what: &str,
    path: &Path,
    row: usize,
) -> Result<T, IngestError> {
    raw.parse().map_err(|_| IngestError::Parse {
        path: path.to_path_buf(),
        row,
        detail: format!("cannot parse `{raw}` as {what}"),
    })
}

/// Load and cross-validate the asset metadata and sales files. Every sales
/// row must join to exactly one asset; every series must be contiguous and
/// non-negative. Assets come back sorted by id.
pub fn load_assets(assets_path: &Path, sales_path: &Path) -> Result<Vec<AssetRecord>, IngestError> {
    let mut reader = csv::Reader::from_path(assets_path).map_err(|e| IngestError::Csv {
        path: assets_path.to_path_buf(),
        detail: e.to_string(),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Csv {
            path: assets_path.to_path_buf(),
            detail: e.to_string(),
        })?
        .clone();
    let mut assets: BTreeMap<String, AssetRecord> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after header
        let record = record.map_err(|e| IngestError::Csv {
            path: assets_path.to_path_buf(),
            detail: e.to_string(),
        })?;
        let get = |name: &str| field(&record, &headers, name, assets_path, row);
        let asset_id = get("asset_id")?.to_string();
        let category_raw = get("category")?;
        let category = Category::parse(category_raw).ok_or_else(|| IngestError::Parse {
            path: assets_path.to_path_buf(),
            row,
            detail: format!("unknown category `{category_raw}`"),
        })?;
        let asset = AssetRecord {
            display_name: get("display_name")?.to_string(),
            launch_year: parse_as(get("launch_year")?, "a year", assets_path, row)?,
            ip_expiry_year: parse_as(get("ip_expiry_year")?, "a year", assets_path, row)?,
            category,
            n_phase3_trials: parse_as(get("n_phase3_trials")?, "a count", assets_path, row)?,
            n_conditions: parse_as(get("n_conditions")?, "a count", assets_path, row)?,
            asset_id: asset_id.clone(),
            sales: Vec::new(),
        };
        if assets.insert(asset_id.clone(), asset).is_some() {
            return Err(IngestError::DuplicateAssetId { asset_id });
        }
    }

    let mut reader = csv::Reader::from_path(sales_path).map_err(|e| IngestError::Csv {
        path: sales_path.to_path_buf(),
        detail: e.to_string(),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Csv {
            path: sales_path.to_path_buf(),
            detail: e.to_string(),
        })?
        .clone();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| IngestError::Csv {
            path: sales_path.to_path_buf(),
            detail: e.to_string(),
        })?;
        let get = |name: &str| field(&record, &headers, name, sales_path, row);
        let asset_id = get("asset_id")?.to_string();
        let year: i32 = parse_as(get("year")?, "a year", sales_path, row)?;
        let revenue_musd: f64 = parse_as(get("revenue_musd")?, "a number", sales_path, row)?;
        match assets.get_mut(&asset_id) {
            Some(asset) => asset.sales.push(SalesPoint { year, revenue_musd }),
            None => return Err(IngestError::MissingAsset { asset_id, year }),
        }
    }

    for asset in assets.values_mut() {
        asset.sales.sort_by_key(|p| p.year);
    }
    let out: Vec<AssetRecord> = assets.into_values().collect();
    for asset in &out {
        asset.validate()?;
    }
    Ok(out)
}

/// Serialize records back to the two CSV files (inverse of `load_assets`).
pub fn write_assets(
    assets_path: &Path,
    sales_path: &Path,
    records: &[AssetRecord],
) -> Result<(), IngestError> {
    let mut assets = String::from(
        "asset_id,display_name,launch_year,ip_expiry_year,category,n_phase3_trials,n_conditions\n",
    );
    let mut sales = String::from("asset_id,year,revenue_musd\n");
    for r in records {
        assets.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.asset_id,
            r.display_name,
            r.launch_year,
            r.ip_expiry_year,
            r.category.as_str(),
            r.n_phase3_trials,
            r.n_conditions
        ));
        for p in &r.sales {
            sales.push_str(&format!("{},{},{}\n", r.asset_id, p.year, p.revenue_musd));
        }
    }
    fs::write(assets_path, assets).map_err(|e| IngestError::Io {
        path: assets_path.to_path_buf(),
        source: e,
    })?;
    fs::write(sales_path, sales).map_err(|e| IngestError::Io {
        path: sales_path.to_path_buf(),
        source: e,
    })
}

/// Parse a `key = value` config file; unspecified keys keep their defaults.
pub fn load_config(path: &Path) -> Result<RunConfig, IngestError> {
    let text = fs::read_to_string(path).map_err(|e| IngestError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut config = RunConfig::default();
    for (i, raw_line) in text.lines().enumerate() {
        let row = i + 1;
        let line = match raw_line.split_once('#') {
            Some((before, _)) => before,
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| IngestError::Parse {
            path: path.to_path_buf(),
            row,
            detail: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| IngestError::Parse {
            path: path.to_path_buf(),
            row,
            detail: format!("cannot parse `{value}` as {what}"),
        };
        match key {
            "discount_rate" => config.discount_rate = value.parse().map_err(|_| bad("a number"))?,
            "lambda_rate" => config.lambda_rate = value.parse().map_err(|_| bad("a number"))?,
            "ts_orientation" => {
                config.ts_orientation =
                    TsOrientation::parse(value).ok_or_else(|| bad("an orientation"))?
            }
            "n_sims" => config.n_sims = value.parse().map_err(|_| bad("a count"))?,
            "seed" => config.seed = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "saturation_fit_tolerance" => {
                config.saturation_fit_tolerance = value.parse().map_err(|_| bad("a number"))?
            }
            "max_fit_iterations" => {
                config.max_fit_iterations = value.parse().map_err(|_| bad("a count"))?
            }
            "saturation_level_fraction" => {
                config.saturation_level_fraction = value.parse().map_err(|_| bad("a number"))?
            }
            "saturation_growth_threshold" => {
                config.saturation_growth_threshold = value.parse().map_err(|_| bad("a number"))?
            }
            "forecast_floor_fraction" => {
                config.forecast_floor_fraction = value.parse().map_err(|_| bad("a number"))?
            }
            "max_horizon_years" => {
                config.max_horizon_years = value.parse().map_err(|_| bad("a count"))?
            }
            other => {
                return Err(IngestError::Config(ConfigError::UnknownKey {
                    key: other.to_string(),
                }))
            }
        }
    }
    config.validate()?;
    Ok(config)
}

/// Single-row balance sheet CSV.
pub fn load_balance(path: &Path) -> Result<BalanceSheet, IngestError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| IngestError::Csv {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Csv {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?
        .clone();
    let record = reader
        .records()
        .next()
        .ok_or_else(|| IngestError::Csv {
            path: path.to_path_buf(),
            detail: "balance file has no data row".to_string(),
        })?
        .map_err(|e| IngestError::Csv {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
    let get = |name: &str| -> Result<f64, IngestError> {
        parse_as(
            field(&record, &headers, name, path, 2)?,
            "a number",
            path,
            2,
        )
    };
    let balance = BalanceSheet {
        market_cap: get("market_cap_musd")?,
        current_assets: get("current_assets_musd")?,
        cash_on_hand: get("cash_musd")?,
        total_liabilities: get("total_liabilities_musd")?,
    };
    let nonnegative = [
        ("current_assets_musd", balance.current_assets),
        ("cash_musd", balance.cash_on_hand),
        ("total_liabilities_musd", balance.total_liabilities),
    ];
    for (name, v) in nonnegative {
        if v.is_nan() || v < 0.0 {
            return Err(IngestError::Parse {
                path: path.to_path_buf(),
                row: 2,
                detail: format!("{name} must be non-negative, got {v}"),
            });
        }
    }
    if balance.market_cap.is_nan() || balance.market_cap <= 0.0 {
        return Err(IngestError::Parse {
            path: path.to_path_buf(),
            row: 2,
            detail: format!(
                "market_cap_musd must be positive, got {}",
                balance.market_cap
            ),
        });
    }
    Ok(balance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
        let path = dir.join(name);
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    const ASSETS_HEADER: &str =
        "asset_id,display_name,launch_year,ip_expiry_year,category,n_phase3_trials,n_conditions\n";

    #[test]
    fn minimal_well_formed_input() {
        let dir = tempfile::tempdir().unwrap();
        let assets = write_file(
            dir.path(),
            "assets.csv",
            &format!("{ASSETS_HEADER}a1,Asset One,2014,2030,Cancer,3,2\n"),
        );
        let sales = write_file(
            dir.path(),
            "sales.csv",
            "asset_id,year,revenue_musd\na1,2015,100\na1,2016,200\n",
        );
        let records = load_assets(&assets, &sales).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].sales.len(), 2);
        assert_eq!(records[0].category, Category::Cancer);
    }

    #[test]
    fn gap_in_series_is_reported_with_year() {
        let dir = tempfile::tempdir().unwrap();
        let assets = write_file(
            dir.path(),
            "assets.csv",
            &format!("{ASSETS_HEADER}a1,Asset One,2014,2030,other,0,0\n"),
        );
        let sales = write_file(
            dir.path(),
            "sales.csv",
            "asset_id,year,revenue_musd\na1,2015,100\na1,2017,200\n",
        );
        match load_assets(&assets, &sales).unwrap_err() {
            IngestError::Domain(DomainError::GapInSeries { missing_year, .. }) => {
                assert_eq!(missing_year, 2016)
            }
            other => panic!("expected gap, got {other}"),
        }
    }

    #[test]
    fn negative_revenue_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let assets = write_file(
            dir.path(),
            "assets.csv",
            &format!("{ASSETS_HEADER}a1,Asset One,2014,2030,other,0,0\n"),
        );
        let sales = write_file(
            dir.path(),
            "sales.csv",
            "asset_id,year,revenue_musd\na1,2016,-5\n",
        );
        assert!(matches!(
            load_assets(&assets, &sales).unwrap_err(),
            IngestError::Domain(DomainError::NegativeRevenue { year: 2016, .. })
        ));
    }

    #[test]
    fn orphan_sales_row_is_a_missing_asset() {
        let dir = tempfile::tempdir().unwrap();
        let assets = write_file(
            dir.path(),
            "assets.csv",
            &format!("{ASSETS_HEADER}a1,Asset One,2014,2030,other,0,0\n"),
        );
        let sales = write_file(
            dir.path(),
            "sales.csv",
            "asset_id,year,revenue_musd\nzz,2015,10\n",
        );
        match load_assets(&assets, &sales).unwrap_err() {
            IngestError::MissingAsset { asset_id, year } => {
                assert_eq!(asset_id, "zz");
                assert_eq!(year, 2015);
            }
            other => panic!("expected missing asset, got {other}"),
        }
    }

    #[test]
    fn round_trip_preserves_records() {
        let dir = tempfile::tempdir().unwrap();
        let assets = write_file(
            dir.path(),
            "assets.csv",
            &format!(
                "{ASSETS_HEADER}a1,Asset One,2014,2030,cancer,3,2\nb2,Asset Two,2010,2026,immune,11,7\n"
            ),
        );
        let sales = write_file(
            dir.path(),
            "sales.csv",
            "asset_id,year,revenue_musd\na1,2015,100.5\na1,2016,200.25\nb2,2011,40\nb2,2012,80\nb2,2013,120\n",
        );
        let records = load_assets(&assets, &sales).unwrap();
        let assets2 = dir.path().join("assets2.csv");
        let sales2 = dir.path().join("sales2.csv");
        write_assets(&assets2, &sales2, &records).unwrap();
        let reloaded = load_assets(&assets2, &sales2).unwrap();
        assert_eq!(records, reloaded);
    }

    #[test]
    fn empty_config_gives_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "run.conf", "");
        let config = load_config(&path).unwrap();
        assert_eq!(config, RunConfig::default());
        assert_eq!(config.discount_rate, 0.1);
        assert_eq!(config.n_sims, 10_000);
    }

    #[test]
    fn config_parses_comments_and_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "run.conf",
            "# run setup\nseed = 42\nlambda_rate = 0.8  # per year\nts_orientation = backward_from_ip\n\nn_sims = 500\n",
        );
        let config = load_config(&path).unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.lambda_rate, 0.8);
        assert_eq!(config.ts_orientation, TsOrientation::BackwardFromIp);
        assert_eq!(config.n_sims, 500);
        // Parsing is deterministic.
        assert_eq!(load_config(&path).unwrap(), config);
    }

    #[test]
    fn out_of_range_config_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "run.conf", "discount_rate = 1.5\n");
        assert!(matches!(
            load_config(&path).unwrap_err(),
            IngestError::Config(ConfigError::OutOfRange { .. })
        ));
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "run.conf", "discount = 0.1\n");
        assert!(matches!(
            load_config(&path).unwrap_err(),
            IngestError::Config(ConfigError::UnknownKey { .. })
        ));
    }

    #[test]
    fn balance_sheet_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "balance.csv",
            "market_cap_musd,current_assets_musd,cash_musd,total_liabilities_musd\n174000,74000,40000,117800\n",
        );
        let b = load_balance(&path).unwrap();
        assert_eq!(b.market_cap, 174_000.0);
        assert_eq!(b.total_liabilities, 117_800.0);
    }
}
