//! Core model for post-revenue pharmaceutical asset valuation.
//!
//! A sales cycle is modeled as a piecewise logistic curve that rises to a
//! saturation level `s` and declines mirror-symmetrically about a mid-cycle
//! time `t_s`. This crate fits that curve to annual revenue series, models
//! saturation-timing uncertainty with a truncated exponential prior over
//! candidate saturation years, and values a portfolio of assets by seeded
//! Monte Carlo simulation of discounted future cash flows.
//!
//! The crate is `no_std` (with `alloc`); all float math routes through
//! `libm`, so results are bit-identical across platforms. File formats,
//! CSV/JSON ingest, and the command-line front end live in the companion
//! `postrev-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod curve;
pub mod dist;
pub mod domain;
pub mod fit;
mod num;
pub mod rng;
pub mod scenario;
pub mod valuation;

pub use curve::{eval_curve, eval_quad, CurveParams, QuadParams};
pub use domain::{AssetRecord, Category, RunConfig, SalesPoint, TsOrientation};
pub use fit::{fit_full, fit_growth, fit_quad, FitError, FitResult};
pub use scenario::{build_scenarios, Scenario, ScenarioError, ScenarioSet};
pub use valuation::{
    implied_prerevenue, npv, simulate_portfolio, BalanceSheet, ValuationError, ValuationResult,
};
