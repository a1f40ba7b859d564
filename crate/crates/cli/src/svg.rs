//! SVG emission: per-asset sales plots with scenario facets, and the
//! portfolio NPV histogram. Plain string building, fixed decimal formatting,
//! no plotting framework.

use postrev_core::curve::eval_curve;
use postrev_core::domain::AssetRecord;
use postrev_core::fit::FitResult;
use postrev_core::scenario::ScenarioSet;

const WIDTH: f64 = 860.0;
const MAIN_HEIGHT: f64 = 420.0;
const FACET_HEIGHT: f64 = 110.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 45.0;

const COLOR_OBSERVED: &str = "#1f3a5f";
const COLOR_FIT: &str = "#d35400";
const COLOR_SCENARIO: &str = "#2980b9";
const COLOR_BAND: &str = "#aed6f1";
const COLOR_AXIS: &str = "#2c3e50";
const COLOR_GRID: &str = "#e5e8ea";

pub fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y1: f64,
    px: f64,
    py: f64,
    top: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y1: f64, top: f64, height: f64) -> Frame {
        Frame {
            x0,
            x1,
            y1,
            px: (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / (x1 - x0).max(1e-9),
            py: (height - MARGIN_BOTTOM - 10.0) / y1.max(1e-9),
            top,
        }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN_LEFT + (v - self.x0) * self.px
    }

    fn y(&self, v: f64) -> f64 {
        self.top + (self.y1 - v) * self.py
    }

    fn bottom(&self) -> f64 {
        self.y(0.0)
    }
}

fn polyline(points: &[(f64, f64)], frame: &Frame, style: &str) -> String {
    if points.is_empty() {
        return String::new();
    }
    let mut coords = String::new();
    for &(x, y) in points {
        coords.push_str(&format!("{:.2},{:.2} ", frame.x(x), frame.y(y)));
    }
    format!(r#"<polyline points="{}" {} />"#, coords.trim_end(), style)
}

fn axis_and_grid(frame: &Frame, y_max: f64, x_label_step: i32) -> String {
    let mut out = String::new();
    for k in 1..=4 {
        let value = y_max * k as f64 / 4.0;
        let y = frame.y(value);
        out.push_str(&format!(
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="1" />"#,
            frame.x(frame.x0),
            y,
            frame.x(frame.x1),
            y,
            COLOR_GRID
        ));
        out.push_str(&format!(
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11" fill="{}">{:.2}B</text>"#,
            frame.x(frame.x0) - 6.0,
            y + 4.0,
            COLOR_AXIS,
            value / 1000.0
        ));
    }
    out.push_str(&format!(
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="1.5" />"#,
        frame.x(frame.x0),
        frame.bottom(),
        frame.x(frame.x1),
        frame.bottom(),
        COLOR_AXIS
    ));
    out.push_str(&format!(
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="1.5" />"#,
        frame.x(frame.x0),
        frame.top,
        frame.x(frame.x0),
        frame.bottom(),
        COLOR_AXIS
    ));
    let mut year = frame.x0 as i32;
    while (year as f64) <= frame.x1 {
        out.push_str(&format!(
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11" fill="{}">{}</text>"#,
            frame.x(year as f64),
            frame.bottom() + 16.0,
            COLOR_AXIS,
            year
        ));
        year += x_label_step;
    }
    out
}

/// Probability-weighted percentile of scenario values at one year; scenarios
/// whose path has already ended contribute zero.
fn weighted_quantile(values: &mut [(f64, f64)], q: f64) -> f64 {
    values.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut acc = 0.0;
    for &(v, p) in values.iter() {
        acc += p;
        if acc >= q {
            return v;
        }
    }
    values.last().map(|&(v, _)| v).unwrap_or(0.0)
}

/// One asset: observed points, fitted curve, scenario forecast overlays with
/// a 95% band, and one facet strip per scenario.
pub fn asset_plot(asset: &AssetRecord, fit: &FitResult, set: &ScenarioSet) -> String {
    let first = asset.first_sales_year();
    let last = asset.last_sales_year();
    let horizon = set
        .scenarios
        .iter()
        .filter_map(|sc| sc.path.last().map(|p| p.0))
        .max()
        .unwrap_or(last + 1);
    let x0 = first as f64;
    let x1 = horizon.max(last + 1) as f64;
    let observed_max = asset.max_revenue();
    let y_max = 1.1 * fit.params.s.max(observed_max);
    let n_facets = set.scenarios.len();
    let total_height = MAIN_HEIGHT + FACET_HEIGHT * n_facets as f64;
    let x_step = (((x1 - x0) / 8.0).ceil() as i32).max(1);

    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {total_height}" width="{WIDTH}" height="{total_height}">"#
    );
    svg.push_str(&format!(
        r#"<rect width="{WIDTH}" height="{total_height}" fill="white"/>"#
    ));
    svg.push_str(&format!(
        r#"<text x="{:.2}" y="28" text-anchor="middle" font-family="sans-serif" font-size="17" font-weight="bold" fill="{}">{}</text>"#,
        WIDTH / 2.0,
        COLOR_AXIS,
        escape_xml(&asset.display_name)
    ));

    let frame = Frame::new(x0, x1, y_max, MARGIN_TOP, MAIN_HEIGHT);
    svg.push_str(&axis_and_grid(&frame, y_max, x_step));

    // 95% band across scenarios, year by year.
    if set.scenarios.len() > 1 {
        let mut upper_pts: Vec<(f64, f64)> = Vec::new();
        let mut lower_pts: Vec<(f64, f64)> = Vec::new();
        for year in (last + 1)..=horizon {
            let mut values: Vec<(f64, f64)> = set
                .scenarios
                .iter()
                .map(|sc| {
                    let v = sc
                        .path
                        .iter()
                        .find(|&&(y, _)| y == year)
                        .map(|&(_, v)| v)
                        .unwrap_or(0.0);
                    (v, sc.probability)
                })
                .collect();
            lower_pts.push((year as f64, weighted_quantile(&mut values, 0.025)));
            upper_pts.push((year as f64, weighted_quantile(&mut values, 0.975)));
        }
        if !upper_pts.is_empty() {
            let mut d = String::new();
            for &(x, y) in &upper_pts {
                d.push_str(&format!("{:.2},{:.2} ", frame.x(x), frame.y(y)));
            }
            for &(x, y) in lower_pts.iter().rev() {
                d.push_str(&format!("{:.2},{:.2} ", frame.x(x), frame.y(y)));
            }
            svg.push_str(&format!(
                r#"<polygon points="{}" fill="{}" fill-opacity="0.55" stroke="none" />"#,
                d.trim_end(),
                COLOR_BAND
            ));
        }
    }

    // Fitted curve over the observed window.
    let fitted: Vec<(f64, f64)> = (first..=last)
        .map(|year| (year as f64, eval_curve(&fit.params, (year - first) as f64)))
        .collect();
    svg.push_str(&polyline(
        &fitted,
        &frame,
        &format!(r#"fill="none" stroke="{COLOR_FIT}" stroke-width="2""#),
    ));

    // Scenario forecast overlays.
    for sc in &set.scenarios {
        let mut pts: Vec<(f64, f64)> = vec![(
            last as f64,
            asset.sales.last().map(|p| p.revenue_musd).unwrap_or(0.0),
        )];
        pts.extend(sc.path.iter().map(|&(y, v)| (y as f64, v)));
        svg.push_str(&polyline(
            &pts,
            &frame,
            &format!(
                r#"fill="none" stroke="{COLOR_SCENARIO}" stroke-width="1.2" stroke-opacity="0.8""#
            ),
        ));
    }

    // Observed points on top.
    for p in &asset.sales {
        svg.push_str(&format!(
            r#"<circle cx="{:.2}" cy="{:.2}" r="3.2" fill="{}" />"#,
            frame.x(p.year as f64),
            frame.y(p.revenue_musd),
            COLOR_OBSERVED
        ));
    }

    // One facet per scenario.
    for (i, sc) in set.scenarios.iter().enumerate() {
        let top = MAIN_HEIGHT + i as f64 * FACET_HEIGHT;
        let facet = Frame::new(x0, x1, y_max, top + 24.0, FACET_HEIGHT + 24.0 - 10.0);
        svg.push_str(&format!(r#"<g class="facet" id="facet-{i}">"#));
        svg.push_str(&format!(
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="1" />"#,
            MARGIN_LEFT,
            top + 12.0,
            WIDTH - MARGIN_RIGHT,
            top + 12.0,
            COLOR_GRID
        ));
        svg.push_str(&format!(
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" fill="{}">saturation {} (p = {:.4}, cumulative {:.3}B)</text>"#,
            MARGIN_LEFT,
            top + 26.0,
            COLOR_AXIS,
            sc.t_s_year,
            sc.probability,
            sc.cumulative_musd / 1000.0
        ));
        let observed: Vec<(f64, f64)> = asset
            .sales
            .iter()
            .map(|p| (p.year as f64, p.revenue_musd))
            .collect();
        svg.push_str(&polyline(
            &observed,
            &facet,
            &format!(
                r#"fill="none" stroke="{COLOR_OBSERVED}" stroke-width="1" stroke-opacity="0.5""#
            ),
        ));
        let mut pts: Vec<(f64, f64)> = vec![(
            last as f64,
            asset.sales.last().map(|p| p.revenue_musd).unwrap_or(0.0),
        )];
        pts.extend(sc.path.iter().map(|&(y, v)| (y as f64, v)));
        svg.push_str(&polyline(
            &pts,
            &facet,
            &format!(r#"fill="none" stroke="{COLOR_SCENARIO}" stroke-width="1.6""#),
        ));
        svg.push_str("</g>");
    }

    svg.push_str("</svg>\n");
    svg
}

/// Histogram of the Monte Carlo portfolio NPV samples.
pub fn portfolio_histogram(samples: &[f64], mean: f64) -> String {
    const BINS: usize = 40;
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-9);
    let mut counts = [0usize; BINS];
    for &v in samples {
        let mut idx = ((v - lo) / span * BINS as f64) as usize;
        if idx >= BINS {
            idx = BINS - 1;
        }
        counts[idx] += 1;
    }
    let peak = counts.iter().copied().max().unwrap_or(1).max(1) as f64;

    let height = 420.0;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = height - MARGIN_TOP - MARGIN_BOTTOM;
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {height}" width="{WIDTH}" height="{height}">"#
    );
    svg.push_str(&format!(
        r#"<rect width="{WIDTH}" height="{height}" fill="white"/>"#
    ));
    svg.push_str(&format!(
        r#"<text x="{:.2}" y="28" text-anchor="middle" font-family="sans-serif" font-size="17" font-weight="bold" fill="{}">Portfolio NPV distribution ({} samples)</text>"#,
        WIDTH / 2.0,
        COLOR_AXIS,
        samples.len()
    ));
    for (i, &c) in counts.iter().enumerate() {
        let bar_h = plot_h * c as f64 / peak;
        let x = MARGIN_LEFT + plot_w * i as f64 / BINS as f64;
        svg.push_str(&format!(
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}" stroke="white" stroke-width="0.5" />"#,
            x,
            MARGIN_TOP + plot_h - bar_h,
            plot_w / BINS as f64,
            bar_h,
            COLOR_SCENARIO
        ));
    }
    svg.push_str(&format!(
        r#"<line x1="{MARGIN_LEFT:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="1.5" />"#,
        MARGIN_TOP + plot_h,
        WIDTH - MARGIN_RIGHT,
        MARGIN_TOP + plot_h,
        COLOR_AXIS
    ));
    let mean_x = MARGIN_LEFT + plot_w * ((mean - lo) / span).clamp(0.0, 1.0);
    svg.push_str(&format!(
        r#"<line x1="{mean_x:.2}" y1="{MARGIN_TOP:.2}" x2="{mean_x:.2}" y2="{:.2}" stroke="{}" stroke-width="1.5" stroke-dasharray="5,3" />"#,
        MARGIN_TOP + plot_h,
        COLOR_FIT
    ));
    for (value, anchor) in [(lo, "start"), (hi, "end")] {
        let x = MARGIN_LEFT + plot_w * ((value - lo) / span);
        svg.push_str(&format!(
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="{anchor}" font-family="sans-serif" font-size="11" fill="{}">{:.3}B</text>"#,
            MARGIN_TOP + plot_h + 16.0,
            COLOR_AXIS,
            value / 1000.0
        ));
    }
    svg.push_str(&format!(
        r#"<text x="{mean_x:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11" fill="{}">mean {:.3}B</text>"#,
        MARGIN_TOP - 6.0,
        COLOR_FIT,
        mean / 1000.0
    ));
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use postrev_core::curve::CurveParams;
    use postrev_core::domain::{Category, SalesPoint};
    use postrev_core::scenario::Scenario;

    fn tiny_asset() -> AssetRecord {
        AssetRecord {
            asset_id: "a1".into(),
            display_name: "Asset <One> & Co".into(),
            launch_year: 2015,
            ip_expiry_year: 2026,
            category: Category::Other,
            n_phase3_trials: 1,
            n_conditions: 1,
            sales: vec![
                SalesPoint {
                    year: 2015,
                    revenue_musd: 100.0,
                },
                SalesPoint {
                    year: 2016,
                    revenue_musd: 400.0,
                },
                SalesPoint {
                    year: 2017,
                    revenue_musd: 800.0,
                },
            ],
        }
    }

    fn tiny_fit() -> FitResult {
        FitResult {
            params: CurveParams::new(1000.0, 2.5, -1.0),
            sse: 1.0,
            n_iterations: 10,
            converged: true,
            t_max: 2.0,
            saturated: false,
            saturation_year: None,
            sse_trace: vec![],
        }
    }

    fn scenarios(n: usize) -> ScenarioSet {
        let scenarios: Vec<Scenario> = (0..n)
            .map(|i| Scenario {
                t_s_year: 2017 + i as i32,
                probability: 1.0 / n as f64,
                path: vec![(2018, 900.0 - 50.0 * i as f64), (2019, 700.0)],
                cumulative_musd: 2900.0,
            })
            .collect();
        ScenarioSet {
            asset_id: "a1".into(),
            last_observed_year: 2017,
            scenarios,
            expected_cumulative_musd: 2900.0,
        }
    }

    #[test]
    fn facet_count_matches_scenarios() {
        let svg = asset_plot(&tiny_asset(), &tiny_fit(), &scenarios(1));
        assert_eq!(svg.matches(r#"class="facet""#).count(), 1);
        let svg4 = asset_plot(&tiny_asset(), &tiny_fit(), &scenarios(4));
        assert_eq!(svg4.matches(r#"class="facet""#).count(), 4);
    }

    #[test]
    fn output_is_deterministic_and_escaped() {
        let a = asset_plot(&tiny_asset(), &tiny_fit(), &scenarios(3));
        let b = asset_plot(&tiny_asset(), &tiny_fit(), &scenarios(3));
        assert_eq!(a, b);
        assert!(a.contains("Asset &lt;One&gt; &amp; Co"));
        assert!(!a.contains("Asset <One>"));
    }

    #[test]
    fn histogram_renders_mean_marker() {
        let samples: Vec<f64> = (0..1000).map(|i| 1000.0 + i as f64).collect();
        let svg = portfolio_histogram(&samples, 1499.5);
        assert!(svg.contains("mean 1.500B") || svg.contains("mean 1.499B"));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
