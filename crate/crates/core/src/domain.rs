//! Domain types: assets, their annual revenue series, and run configuration.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Indication class of an asset. `Infectious` is kept distinct for reporting
/// but maps onto the `Other` reference level in post-hoc regressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Cancer,
    Immune,
    Infectious,
    Other,
}

impl Category {
    /// Case-insensitive parse of the CSV token.
    pub fn parse(token: &str) -> Option<Category> {
        let t = token.trim();
        if t.eq_ignore_ascii_case("cancer") {
            Some(Category::Cancer)
        } else if t.eq_ignore_ascii_case("immune") {
            Some(Category::Immune)
        } else if t.eq_ignore_ascii_case("infectious") {
            Some(Category::Infectious)
        } else if t.eq_ignore_ascii_case("other") {
            Some(Category::Other)
        } else {
            None
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Cancer => "cancer",
            Category::Immune => "immune",
            Category::Infectious => "infectious",
            Category::Other => "other",
        }
    }
}

/// One observed annual revenue figure, in USD millions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SalesPoint {
    pub year: i32,
    pub revenue_musd: f64,
}

/// One post-revenue asset: identity, metadata, and its annual revenue series.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetRecord {
    pub asset_id: String,
    pub display_name: String,
    pub launch_year: i32,
    pub ip_expiry_year: i32,
    pub category: Category,
    pub n_phase3_trials: u32,
    pub n_conditions: u32,
    /// Strictly increasing, contiguous years; all revenues >= 0.
    pub sales: Vec<SalesPoint>,
}

/// How far past IP expiry a revenue series may plausibly extend.
const SERIES_SANITY_YEARS: i32 = 40;

impl AssetRecord {
    /// Check every series invariant; a record that passes supports the
    /// panic-free accessors below.
    pub fn validate(&self) -> Result<(), DomainError> {
        let id = || self.asset_id.clone();
        let first = match self.sales.first() {
            Some(p) => p,
            None => return Err(DomainError::EmptySeries { asset_id: id() }),
        };
        if self.launch_year > first.year {
            return Err(DomainError::LaunchAfterFirstSale {
                asset_id: id(),
                launch_year: self.launch_year,
                first_sales_year: first.year,
            });
        }
        let mut prev = first.year - 1;
        for p in &self.sales {
            if p.year == prev {
                return Err(DomainError::DuplicateYear {
                    asset_id: id(),
                    year: p.year,
                });
            }
            if p.year < prev {
                return Err(DomainError::UnsortedSeries {
                    asset_id: id(),
                    year: p.year,
                });
            }
            if p.year > prev + 1 {
                return Err(DomainError::GapInSeries {
                    asset_id: id(),
                    missing_year: prev + 1,
                });
            }
            if p.revenue_musd.is_nan() || p.revenue_musd < 0.0 {
                return Err(DomainError::NegativeRevenue {
                    asset_id: id(),
                    year: p.year,
                    revenue_musd: p.revenue_musd,
                });
            }
            prev = p.year;
        }
        let bound = self.ip_expiry_year + SERIES_SANITY_YEARS;
        if prev >= bound {
            return Err(DomainError::SeriesBeyondSanityBound {
                asset_id: id(),
                last_sales_year: prev,
                bound,
            });
        }
        Ok(())
    }

    /// First calendar year with recorded revenue. Requires a validated record.
    pub fn first_sales_year(&self) -> i32 {
        self.sales.first().expect("validated asset has sales").year
    }

    /// Last calendar year with recorded revenue. Requires a validated record.
    pub fn last_sales_year(&self) -> i32 {
        self.sales.last().expect("validated asset has sales").year
    }

    /// Maximum observed annual revenue.
    pub fn max_revenue(&self) -> f64 {
        self.sales
            .iter()
            .map(|p| p.revenue_musd)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Series as (t, y) pairs with t = year - first_sales_year, so t = 0 at
    /// the first revenue year.
    pub fn series_offsets(&self) -> Vec<(f64, f64)> {
        let first = self.first_sales_year();
        self.sales
            .iter()
            .map(|p| ((p.year - first) as f64, p.revenue_musd))
            .collect()
    }
}

/// Revenue-series validation failure; each variant names the offending row.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainError {
    EmptySeries {
        asset_id: String,
    },
    DuplicateYear {
        asset_id: String,
        year: i32,
    },
    UnsortedSeries {
        asset_id: String,
        year: i32,
    },
    GapInSeries {
        asset_id: String,
        missing_year: i32,
    },
    NegativeRevenue {
        asset_id: String,
        year: i32,
        revenue_musd: f64,
    },
    LaunchAfterFirstSale {
        asset_id: String,
        launch_year: i32,
        first_sales_year: i32,
    },
    SeriesBeyondSanityBound {
        asset_id: String,
        last_sales_year: i32,
        bound: i32,
    },
}

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainError::EmptySeries { asset_id } => {
                write!(f, "asset {asset_id}: no sales rows")
            }
            DomainError::DuplicateYear { asset_id, year } => {
                write!(f, "asset {asset_id}: duplicate sales year {year}")
            }
            DomainError::UnsortedSeries { asset_id, year } => {
                write!(f, "asset {asset_id}: sales years not increasing at {year}")
            }
            DomainError::GapInSeries {
                asset_id,
                missing_year,
            } => write!(f, "asset {asset_id}: missing sales year {missing_year}"),
            DomainError::NegativeRevenue {
                asset_id,
                year,
                revenue_musd,
            } => write!(
                f,
                "asset {asset_id}: negative revenue {revenue_musd} in {year}"
            ),
            DomainError::LaunchAfterFirstSale {
                asset_id,
                launch_year,
                first_sales_year,
            } => write!(
                f,
                "asset {asset_id}: launch year {launch_year} after first sales year {first_sales_year}"
            ),
            DomainError::SeriesBeyondSanityBound {
                asset_id,
                last_sales_year,
                bound,
            } => write!(
                f,
                "asset {asset_id}: last sales year {last_sales_year} beyond sanity bound {bound}"
            ),
        }
    }
}

impl core::error::Error for DomainError {}

/// Which end of the saturation window the exponential lag is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsOrientation {
    /// Lag measured forward from the last observed year; probability mass
    /// decreases toward IP expiry.
    ForwardFromLast,
    /// Lag measured backward from IP expiry; mass decreases toward the last
    /// observed year.
    BackwardFromIp,
}

impl TsOrientation {
    pub fn parse(token: &str) -> Option<TsOrientation> {
        let mut norm = String::new();
        for c in token.trim().chars() {
            if c != '_' && c != '-' {
                norm.push(c.to_ascii_lowercase());
            }
        }
        match norm.as_str() {
            "forwardfromlast" => Some(TsOrientation::ForwardFromLast),
            "backwardfromip" => Some(TsOrientation::BackwardFromIp),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TsOrientation::ForwardFromLast => "forward_from_last",
            TsOrientation::BackwardFromIp => "backward_from_ip",
        }
    }
}

/// All tunables for a pipeline run. Defaults reproduce the reference
/// analysis: 10% cost of capital, 10,000 Monte Carlo realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Cost of capital r, in (0, 1).
    pub discount_rate: f64,
    /// Rate of the exponential prior on the saturation lag, per year.
    pub lambda_rate: f64,
    pub ts_orientation: TsOrientation,
    pub n_sims: u32,
    pub seed: u64,
    /// Relative tolerance on the saturation level during fitting.
    pub saturation_fit_tolerance: f64,
    pub max_fit_iterations: u32,
    /// Fraction of s at which the fitted curve counts as saturated.
    pub saturation_level_fraction: f64,
    /// Year-over-year relative growth below which observed sales count as flat.
    pub saturation_growth_threshold: f64,
    /// Forecast paths stop once the curve falls below this fraction of s.
    pub forecast_floor_fraction: f64,
    pub max_horizon_years: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            discount_rate: 0.1,
            lambda_rate: 0.5,
            ts_orientation: TsOrientation::ForwardFromLast,
            n_sims: 10_000,
            seed: 0,
            saturation_fit_tolerance: 1e-6,
            max_fit_iterations: 200,
            saturation_level_fraction: 0.95,
            saturation_growth_threshold: 0.05,
            forecast_floor_fraction: 0.005,
            max_horizon_years: 40,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn out_of_range(key: &str, detail: &str) -> ConfigError {
            ConfigError::OutOfRange {
                key: String::from(key),
                detail: String::from(detail),
            }
        }
        if !(self.discount_rate > 0.0 && self.discount_rate < 1.0) {
            return Err(out_of_range("discount_rate", "must be in (0, 1)"));
        }
        if !(self.lambda_rate > 0.0 && self.lambda_rate.is_finite()) {
            return Err(out_of_range("lambda_rate", "must be a positive real"));
        }
        if self.n_sims == 0 {
            return Err(out_of_range("n_sims", "must be a positive integer"));
        }
        if !(self.saturation_fit_tolerance > 0.0 && self.saturation_fit_tolerance.is_finite()) {
            return Err(out_of_range(
                "saturation_fit_tolerance",
                "must be a positive real",
            ));
        }
        if self.max_fit_iterations == 0 {
            return Err(out_of_range(
                "max_fit_iterations",
                "must be a positive integer",
            ));
        }
        if !(self.saturation_level_fraction > 0.0 && self.saturation_level_fraction < 1.0) {
            return Err(out_of_range(
                "saturation_level_fraction",
                "must be in (0, 1)",
            ));
        }
        if !self.saturation_growth_threshold.is_finite() {
            return Err(out_of_range(
                "saturation_growth_threshold",
                "must be finite",
            ));
        }
        if !(self.forecast_floor_fraction >= 0.0 && self.forecast_floor_fraction < 1.0) {
            return Err(out_of_range("forecast_floor_fraction", "must be in [0, 1)"));
        }
        if self.max_horizon_years == 0 {
            return Err(out_of_range(
                "max_horizon_years",
                "must be a positive integer",
            ));
        }
        Ok(())
    }
}

/// Configuration load/validation failure.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    UnknownKey { key: String },
    OutOfRange { key: String, detail: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::UnknownKey { key } => write!(f, "unknown config key `{key}`"),
            ConfigError::OutOfRange { key, detail } => {
                write!(f, "config key `{key}` out of range: {detail}")
            }
        }
    }
}

impl core::error::Error for ConfigError {}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn asset(sales: Vec<SalesPoint>) -> AssetRecord {
        AssetRecord {
            asset_id: "a1".to_string(),
            display_name: "Asset One".to_string(),
            launch_year: 2014,
            ip_expiry_year: 2030,
            category: Category::Other,
            n_phase3_trials: 3,
            n_conditions: 2,
            sales,
        }
    }

    fn pt(year: i32, revenue_musd: f64) -> SalesPoint {
        SalesPoint { year, revenue_musd }
    }

    #[test]
    fn valid_series_passes() {
        let a = asset(vec![pt(2015, 100.0), pt(2016, 200.0)]);
        assert!(a.validate().is_ok());
        assert_eq!(a.first_sales_year(), 2015);
        assert_eq!(a.last_sales_year(), 2016);
        assert_eq!(a.series_offsets(), vec![(0.0, 100.0), (1.0, 200.0)]);
    }

    #[test]
    fn gap_names_missing_year() {
        let a = asset(vec![pt(2015, 100.0), pt(2017, 200.0)]);
        match a.validate().unwrap_err() {
            DomainError::GapInSeries { missing_year, .. } => assert_eq!(missing_year, 2016),
            other => panic!("expected gap, got {other:?}"),
        }
    }

    #[test]
    fn negative_revenue_rejected() {
        let a = asset(vec![pt(2015, 100.0), pt(2016, -5.0)]);
        match a.validate().unwrap_err() {
            DomainError::NegativeRevenue { year, .. } => assert_eq!(year, 2016),
            other => panic!("expected negative revenue, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_year_rejected() {
        let a = asset(vec![pt(2015, 100.0), pt(2015, 120.0)]);
        assert!(matches!(
            a.validate(),
            Err(DomainError::DuplicateYear { year: 2015, .. })
        ));
    }

    #[test]
    fn nan_revenue_is_rejected() {
        let a = asset(vec![pt(2015, f64::NAN)]);
        assert!(matches!(
            a.validate(),
            Err(DomainError::NegativeRevenue { .. })
        ));
    }

    #[test]
    fn config_defaults_are_valid() {
        let c = RunConfig::default();
        assert!(c.validate().is_ok());
        assert_eq!(c.discount_rate, 0.1);
        assert_eq!(c.n_sims, 10_000);
        assert_eq!(c.max_fit_iterations, 200);
    }

    #[test]
    fn config_bounds_enforced() {
        let c = RunConfig {
            discount_rate: 1.5,
            ..RunConfig::default()
        };
        assert!(
            matches!(c.validate(), Err(ConfigError::OutOfRange { key, .. }) if key == "discount_rate")
        );
    }

    #[test]
    fn category_parse_is_case_insensitive() {
        assert_eq!(Category::parse("Cancer"), Some(Category::Cancer));
        assert_eq!(Category::parse("IMMUNE"), Some(Category::Immune));
        assert_eq!(Category::parse("infectious"), Some(Category::Infectious));
        assert_eq!(Category::parse(" other "), Some(Category::Other));
        assert_eq!(Category::parse("unknown"), None);
    }

    #[test]
    fn orientation_parse_accepts_both_spellings() {
        assert_eq!(
            TsOrientation::parse("ForwardFromLast"),
            Some(TsOrientation::ForwardFromLast)
        );
        assert_eq!(
            TsOrientation::parse("backward_from_ip"),
            Some(TsOrientation::BackwardFromIp)
        );
    }
}
