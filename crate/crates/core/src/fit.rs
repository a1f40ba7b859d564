//! Estimation of the sales-curve parameters from an observed revenue series,
//! and classification of whether an asset has reached saturation.
//!
//! The growth fit minimizes the sum of squared errors of the logistic
//! s / (1 + e^(b0 + b1 t)) over the observations up to the revenue peak. The
//! problem is separable: given (b0, b1) the optimal scale has the closed form
//! s = sum(w y) / sum(w^2) with w = 1 / (1 + e^(b0 + b1 t)). The solver
//! searches candidate scales against the logit-transform profile (OLS of
//! log(s/y - 1) on t), then polishes (b0, b1) with a Levenberg-Marquardt
//! loop that re-profiles s through the closed-form scale step at every
//! evaluation. Accepted steps never increase the SSE.

use alloc::vec::Vec;
use core::fmt;

use crate::curve::{CurveParams, QuadParams, EXP_CLAMP};
use crate::domain::{AssetRecord, RunConfig};
use crate::num;

/// Multiple of the observed maximum that the fitted scale must exceed.
const SCALE_HEADROOM: f64 = 1.001;
/// Candidate-ladder geometric step and span for the scale search.
const LADDER_FACTOR: f64 = 1.3;
const LADDER_SPAN: f64 = 1e4;
/// Clip for y/s before the logit transform.
const LOGIT_CLIP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum FitError {
    NotEnoughPoints {
        needed: usize,
        got: usize,
    },
    /// All observations equal; the slope is unidentifiable.
    DegenerateSeries,
    SingularSystem,
}

impl fmt::Display for FitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitError::NotEnoughPoints { needed, got } => {
                write!(f, "need at least {needed} points, got {got}")
            }
            FitError::DegenerateSeries => write!(f, "degenerate series: slope unidentifiable"),
            FitError::SingularSystem => write!(f, "singular normal equations"),
        }
    }
}

impl core::error::Error for FitError {}

/// Outcome of fitting one asset.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: CurveParams,
    /// Sum of squared errors over the fitted points, USD millions squared.
    pub sse: f64,
    pub n_iterations: u32,
    pub converged: bool,
    /// Offset year of the maximum observed revenue (earliest on ties).
    pub t_max: f64,
    pub saturated: bool,
    pub saturation_year: Option<i32>,
    /// Best objective value after each solver step; non-increasing.
    pub sse_trace: Vec<f64>,
}

#[inline]
fn logistic_w(beta0: f64, beta1: f64, t: f64) -> f64 {
    let e = (beta0 + beta1 * t).clamp(-EXP_CLAMP, EXP_CLAMP);
    1.0 / (1.0 + num::exp(e))
}

fn sse_of(s: f64, beta0: f64, beta1: f64, pts: &[(f64, f64)]) -> f64 {
    pts.iter()
        .map(|&(t, y)| {
            let r = s * logistic_w(beta0, beta1, t) - y;
            r * r
        })
        .sum()
}

/// Closed-form scale step: the exact SSE minimizer in s for fixed (b0, b1),
/// clamped to the feasible region s >= s_floor.
fn scale_step(beta0: f64, beta1: f64, pts: &[(f64, f64)], s_floor: f64) -> f64 {
    let mut num_ = 0.0;
    let mut den = 0.0;
    for &(t, y) in pts {
        let w = logistic_w(beta0, beta1, t);
        num_ += w * y;
        den += w * w;
    }
    (num_ / den).max(s_floor)
}

/// Shape step: OLS of z = log(s/y - 1) on t, with y/s clipped away from
/// {0, 1}. Returns None when the t values are degenerate.
fn logit_ols(s: f64, pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    let mut t_sum = 0.0;
    let mut z_sum = 0.0;
    for &(t, y) in pts {
        let frac = (y / s).clamp(LOGIT_CLIP, 1.0 - LOGIT_CLIP);
        t_sum += t;
        z_sum += num::ln(1.0 / frac - 1.0);
    }
    let t_bar = t_sum / n;
    let z_bar = z_sum / n;
    let mut sxx = 0.0;
    let mut sxz = 0.0;
    for &(t, y) in pts {
        let frac = (y / s).clamp(LOGIT_CLIP, 1.0 - LOGIT_CLIP);
        let z = num::ln(1.0 / frac - 1.0);
        sxx += (t - t_bar) * (t - t_bar);
        sxz += (t - t_bar) * (z - z_bar);
    }
    if sxx <= 0.0 {
        return None;
    }
    let beta1 = sxz / sxx;
    Some((z_bar - beta1 * t_bar, beta1))
}

struct Best {
    sse: f64,
    s: f64,
    beta0: f64,
    beta1: f64,
}

impl Best {
    fn offer(&mut self, sse: f64, s: f64, beta0: f64, beta1: f64) {
        if sse < self.sse {
            *self = Best {
                sse,
                s,
                beta0,
                beta1,
            };
        }
    }
}

/// Fit (s, b0, b1) to the growth phase of a series.
///
/// `points` are (t, y) pairs, typically offsets up to the revenue peak.
/// Converges when the candidate-scale interval shrinks below `tolerance`
/// relative and the polish stalls; otherwise returns the best iterate with
/// `converged = false`.
pub fn fit_growth(
    points: &[(f64, f64)],
    tolerance: f64,
    max_iter: u32,
) -> Result<FitResult, FitError> {
    let n = points.len();
    if n < 3 {
        return Err(FitError::NotEnoughPoints { needed: 3, got: n });
    }
    let max_y = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let min_y = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    if max_y.is_nan() || max_y <= 0.0 || (max_y - min_y) <= 1e-12 * max_y.abs().max(1.0) {
        return Err(FitError::DegenerateSeries);
    }
    {
        let t0 = points[0].0;
        if points.iter().all(|p| p.0 == t0) {
            return Err(FitError::DegenerateSeries);
        }
    }

    let s_floor = SCALE_HEADROOM * max_y;
    let budget = max_iter;
    let mut used: u32 = 0;
    let mut trace: Vec<f64> = Vec::new();
    let mut best = Best {
        sse: f64::INFINITY,
        s: s_floor,
        beta0: 0.0,
        beta1: -0.1,
    };

    // Candidate-scale ladder: profile the transform OLS at each scale and
    // also try the exact scale step from the profiled shape.
    let mut ladder: Vec<f64> = Vec::new();
    ladder.push(s_floor);
    let mut s = 1.05 * max_y;
    while s <= LADDER_SPAN * max_y {
        ladder.push(s);
        s *= LADDER_FACTOR;
    }
    let mut profile_sse: Vec<f64> = Vec::with_capacity(ladder.len());
    for &cand in &ladder {
        if used >= budget {
            break;
        }
        used += 1;
        match logit_ols(cand, points) {
            Some((b0, b1)) => {
                let f = sse_of(cand, b0, b1, points);
                profile_sse.push(f);
                best.offer(f, cand, b0, b1);
                let s2 = scale_step(b0, b1, points, s_floor);
                best.offer(sse_of(s2, b0, b1, points), s2, b0, b1);
            }
            None => return Err(FitError::DegenerateSeries),
        }
        trace.push(best.sse);
    }

    // Golden-section refinement of the scale around the ladder minimum.
    let mut golden_done = false;
    if profile_sse.len() >= 2 {
        let i_min = profile_sse
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(core::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut a = ladder[i_min.saturating_sub(1)];
        let mut b = ladder[(i_min + 1).min(profile_sse.len() - 1)];
        let invphi = (num::sqrt(5.0) - 1.0) / 2.0;
        let golden_cap = 60.min((budget - used) / 2);
        let eval = |s: f64, best: &mut Best| -> f64 {
            match logit_ols(s, points) {
                Some((b0, b1)) => {
                    let f = sse_of(s, b0, b1, points);
                    best.offer(f, s, b0, b1);
                    f
                }
                None => f64::INFINITY,
            }
        };
        let mut c = b - invphi * (b - a);
        let mut d = a + invphi * (b - a);
        let mut fc = eval(c, &mut best);
        let mut fd = eval(d, &mut best);
        used += 2.min(budget - used);
        let mut iters = 0;
        while iters < golden_cap {
            if (b - a) <= tolerance * c.abs().max(d.abs()) {
                golden_done = true;
                break;
            }
            iters += 1;
            used += 1;
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - invphi * (b - a);
                fc = eval(c, &mut best);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + invphi * (b - a);
                fd = eval(d, &mut best);
            }
            trace.push(best.sse);
        }
        if (b - a) <= tolerance * c.abs().max(d.abs()) {
            golden_done = true;
        }
    }

    // Levenberg-Marquardt polish over (b0, b1) on the reduced problem: the
    // scale is re-profiled through the exact closed-form step at every trial
    // point, the Jacobian includes ds/d(b0, b1) through that step, and a
    // step is accepted only if it does not increase the SSE.
    let Best {
        mut sse,
        mut s,
        mut beta0,
        mut beta1,
    } = best;
    let mut lambda = 1e-3;
    let mut lm_done = false;
    let sse_stop = (tolerance * tolerance).max(1e-15);
    while used < budget {
        used += 1;
        let mut scale_num = 0.0;
        let mut scale_den = 0.0;
        let mut dn = [0.0f64; 2];
        let mut dd = [0.0f64; 2];
        for &(t, y) in points {
            let w = logistic_w(beta0, beta1, t);
            let dw = -w * (1.0 - w);
            scale_num += w * y;
            scale_den += w * w;
            dn[0] += dw * y;
            dn[1] += dw * t * y;
            dd[0] += 2.0 * w * dw;
            dd[1] += 2.0 * w * dw * t;
        }
        // ds/d(b0, b1) of the quotient scale step; zero while the floor
        // clamp is active.
        let clamped = scale_num / scale_den <= s_floor;
        let ds = if clamped {
            [0.0, 0.0]
        } else {
            [
                (dn[0] * scale_den - scale_num * dd[0]) / (scale_den * scale_den),
                (dn[1] * scale_den - scale_num * dd[1]) / (scale_den * scale_den),
            ]
        };
        let mut h00 = 0.0;
        let mut h01 = 0.0;
        let mut h11 = 0.0;
        let mut g0 = 0.0;
        let mut g1 = 0.0;
        for &(t, y) in points {
            let w = logistic_w(beta0, beta1, t);
            let r = s * w - y;
            let dw = -w * (1.0 - w);
            let j0 = ds[0] * w + s * dw;
            let j1 = ds[1] * w + s * dw * t;
            h00 += j0 * j0;
            h01 += j0 * j1;
            h11 += j1 * j1;
            g0 += j0 * r;
            g1 += j1 * r;
        }
        let mut moved = false;
        let mut rel = 0.0;
        let mut s_rel_step = 0.0;
        for _ in 0..60 {
            let a00 = h00 + lambda * h00.max(1e-12);
            let a11 = h11 + lambda * h11.max(1e-12);
            let det = a00 * a11 - h01 * h01;
            if det.abs() < 1e-300 {
                lambda *= 10.0;
                continue;
            }
            let step0 = (-g0 * a11 + g1 * h01) / det;
            let step1 = (-g1 * a00 + g0 * h01) / det;
            let nb0 = beta0 + step0;
            let nb1 = beta1 + step1;
            let ns = scale_step(nb0, nb1, points, s_floor);
            let nf = sse_of(ns, nb0, nb1, points);
            if nf <= sse {
                rel = (sse - nf) / sse.max(1e-300);
                s_rel_step = (ns - s).abs() / s.max(1e-300);
                beta0 = nb0;
                beta1 = nb1;
                s = ns;
                sse = nf;
                lambda = (lambda * 0.3).max(1e-12);
                moved = true;
                break;
            }
            lambda *= 10.0;
        }
        trace.push(sse);
        // Stop once the step stalls: no improving direction, a negligible
        // SSE gain, or a relative scale change under the tolerance.
        if !moved || rel < sse_stop || (s_rel_step < tolerance && rel < 1e-9) {
            lm_done = true;
            break;
        }
    }

    Ok(FitResult {
        params: CurveParams::new(s, beta0, beta1),
        sse,
        n_iterations: used,
        converged: golden_done && lm_done,
        t_max: points
            .iter()
            .fold((points[0].0, f64::NEG_INFINITY), |acc, &(t, y)| {
                if y > acc.1 {
                    (t, y)
                } else {
                    acc
                }
            })
            .0,
        saturated: false,
        saturation_year: None,
        sse_trace: trace,
    })
}

/// Least-squares quadratic baseline via the 3x3 normal equations.
#[allow(clippy::needless_range_loop)]
pub fn fit_quad(points: &[(f64, f64)]) -> Result<QuadParams, FitError> {
    let n = points.len();
    if n < 3 {
        return Err(FitError::NotEnoughPoints { needed: 3, got: n });
    }
    let mut m = [[0.0f64; 4]; 3];
    for &(t, y) in points {
        let t2 = t * t;
        m[0][0] += 1.0;
        m[0][1] += t;
        m[0][2] += t2;
        m[1][2] += t2 * t;
        m[2][2] += t2 * t2;
        m[0][3] += y;
        m[1][3] += t * y;
        m[2][3] += t2 * y;
    }
    m[1][0] = m[0][1];
    m[1][1] = m[0][2];
    m[2][0] = m[0][2];
    m[2][1] = m[1][2];

    // Gaussian elimination with partial pivoting.
    for col in 0..3 {
        let mut pivot = col;
        for row in col + 1..3 {
            if m[row][col].abs() > m[pivot][col].abs() {
                pivot = row;
            }
        }
        if m[pivot][col].abs() < 1e-12 {
            return Err(FitError::SingularSystem);
        }
        m.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let c = m[2][3] / m[2][2];
    let b = (m[1][3] - m[1][2] * c) / m[1][1];
    let a = (m[0][3] - m[0][1] * b - m[0][2] * c) / m[0][0];
    Ok(QuadParams { a, b, c })
}

/// Decide whether the observed series has reached saturation, and if so at
/// which offset year the fitted curve first crosses `level_fraction * s`.
///
/// Saturated means the fitted growth curve has essentially leveled at the
/// last observation AND the final two observed year-over-year growth rates
/// are below `growth_threshold`.
pub fn detect_saturation(
    points: &[(f64, f64)],
    fit: &FitResult,
    level_fraction: f64,
    growth_threshold: f64,
) -> (bool, Option<f64>) {
    let p = &fit.params;
    let n = points.len();
    if n < 3 {
        return (false, None);
    }
    let growth_curve = CurveParams::new(p.s, p.beta0, p.beta1);
    let last_t = points[n - 1].0;
    let level_reached = crate::curve::eval_curve(&growth_curve, last_t) >= level_fraction * p.s;
    if !level_reached {
        return (false, None);
    }
    for k in [n - 1, n - 2] {
        let prev = points[k - 1].1;
        let grow = if prev > 0.0 {
            (points[k].1 - prev) / prev
        } else {
            f64::INFINITY
        };
        // NaN growth (zero base) never counts as flat.
        if grow.is_nan() || grow >= growth_threshold {
            return (false, None);
        }
    }
    if p.beta1 >= -1e-12 {
        return (false, None);
    }
    // First integer offset at which the fitted curve reaches the level.
    let t_star = (num::ln(1.0 / level_fraction - 1.0) - p.beta0) / p.beta1;
    let cross = num::ceil(t_star - 1e-9).max(points[0].0);
    (true, Some(cross))
}

/// Fit one asset end to end: growth fit on the prefix up to the revenue
/// peak, then saturation classification. For a saturated asset the
/// mid-cycle time is pinned at the detected crossing; otherwise it stays
/// unset for the scenario engine.
pub fn fit_full(asset: &AssetRecord, config: &RunConfig) -> Result<FitResult, FitError> {
    let offsets = asset.series_offsets();
    let mut peak = 0usize;
    let mut peak_y = f64::NEG_INFINITY;
    for (i, &(_, y)) in offsets.iter().enumerate() {
        if y > peak_y {
            peak_y = y;
            peak = i;
        }
    }
    let prefix = &offsets[..=peak];
    if prefix.len() < 3 {
        return Err(FitError::NotEnoughPoints {
            needed: 3,
            got: prefix.len(),
        });
    }
    let mut fit = fit_growth(
        prefix,
        config.saturation_fit_tolerance,
        config.max_fit_iterations,
    )?;
    fit.t_max = offsets[peak].0;
    let (saturated, cross) = detect_saturation(
        &offsets,
        &fit,
        config.saturation_level_fraction,
        config.saturation_growth_threshold,
    );
    if saturated {
        let ts = cross.expect("saturated implies crossing");
        fit.params.t_s = Some(ts);
        fit.saturated = true;
        fit.saturation_year = Some(asset.first_sales_year() + ts as i32);
    }
    Ok(fit)
}
