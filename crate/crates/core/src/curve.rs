//! The sales-cycle curves: quadratic baseline and the piecewise symmetric
//! logistic model.

use alloc::vec::Vec;

use crate::num;

/// Quadratic baseline y(t) = a + b t + c t^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

pub fn eval_quad(p: &QuadParams, t: f64) -> f64 {
    p.a + p.b * t + p.c * t * t
}

/// Exponent clamp keeping the logistic total in double precision.
pub const EXP_CLAMP: f64 = 700.0;

/// Parameters of the piecewise symmetric logistic sales curve.
///
/// On the growth branch (t <= t_s) the curve is s / (1 + e^(beta0 + beta1 t));
/// past t_s the argument is mirrored to 2 t_s - t, so decline replays growth
/// in reverse. Growth requires beta1 < 0; `ramp_rate` = -beta1 is the uptake
/// speed. `t_s` is `None` while the mid-cycle time is still undetermined
/// (a not-yet-saturated asset), in which case the curve is pure growth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveParams {
    /// Saturation sales level, USD millions.
    pub s: f64,
    pub beta0: f64,
    pub beta1: f64,
    /// Mid-cycle time in offset years from the first sales year.
    pub t_s: Option<f64>,
}

impl CurveParams {
    pub fn new(s: f64, beta0: f64, beta1: f64) -> Self {
        CurveParams {
            s,
            beta0,
            beta1,
            t_s: None,
        }
    }

    pub fn with_mid_cycle(mut self, t_s: f64) -> Self {
        self.t_s = Some(t_s);
        self
    }

    /// Uptake speed, -beta1. Positive for a growing curve.
    pub fn ramp_rate(&self) -> f64 {
        -self.beta1
    }
}

/// Evaluate the sales curve at offset time `t`.
pub fn eval_curve(p: &CurveParams, t: f64) -> f64 {
    let arg = match p.t_s {
        Some(ts) if t > ts => 2.0 * ts - t,
        _ => t,
    };
    let e = (p.beta0 + p.beta1 * arg).clamp(-EXP_CLAMP, EXP_CLAMP);
    p.s / (1.0 + num::exp(e))
}

/// Curve values on the integer grid t_start..=t_end.
pub fn curve_series(p: &CurveParams, t_start: i32, t_end: i32) -> Vec<(i32, f64)> {
    (t_start..=t_end)
        .map(|t| (t, eval_curve(p, t as f64)))
        .collect()
}
