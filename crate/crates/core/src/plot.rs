//! Standalone SVG density plots.
//!
//! Each group is drawn as a density curve with a short vertical hash at its
//! group estimate; the criterion is a dotted vertical line.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::stats::DensityCurve;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// One curve to draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotGroup {
    pub label: String,
    pub curve: DensityCurve,
    /// Group estimate in the curve's coordinates.
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityPlot {
    pub title: String,
    pub x_label: String,
    pub groups: Vec<PlotGroup>,
    /// Criterion in the curves' coordinates; omitted when `None`.
    pub criterion: Option<f64>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / target as f64;
    let magnitude = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * magnitude)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * magnitude);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Renders the plot. Output depends only on the inputs.
pub fn render_svg(plot: &DensityPlot) -> Result<String> {
    if plot.groups.is_empty() {
        return Err(Error::EmptyInput("plot groups"));
    }
    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_hi: f64 = 0.0;
    for g in &plot.groups {
        x_lo = x_lo.min(g.curve.grid[0]);
        x_hi = x_hi.max(g.curve.grid[g.curve.grid.len() - 1]);
        y_hi = y_hi.max(g.curve.density.iter().copied().fold(0.0, f64::max));
    }
    if let Some(c) = plot.criterion {
        x_lo = x_lo.min(c);
        x_hi = x_hi.max(c);
    }
    if !(x_hi > x_lo) || !(y_hi > 0.0) {
        return Err(Error::ZeroSpread);
    }
    y_hi *= 1.08;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| MARGIN_TOP + plot_h - y / y_hi * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(&plot.title)
    );
    // axes
    let base = sy(0.0);
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN_LEFT:.2}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}" stroke="black"/>"#,
        MARGIN_LEFT + plot_w
    );
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN_LEFT:.2}" y1="{MARGIN_TOP:.2}" x2="{MARGIN_LEFT:.2}" y2="{base:.2}" stroke="black"/>"#
    );
    for t in nice_ticks(x_lo, x_hi, 8) {
        let x = sx(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{base:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            base + 5.0,
            base + 18.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">density</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    for (i, g) in plot.groups.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut path = String::new();
        for (k, (&x, &y)) in g.curve.grid.iter().zip(&g.curve.density).enumerate() {
            let _ = write!(path, "{}{:.2},{:.2}", if k == 0 { "M" } else { " L" }, sx(x), sy(y));
        }
        let _ = writeln!(
            s,
            r#"<path d="{path}" fill="none" stroke="{color}" stroke-width="1.8"/>"#
        );
        let hx = sx(g.estimate);
        let hy = sy(g.curve.at(g.estimate));
        let _ = writeln!(
            s,
            r#"<line x1="{hx:.2}" y1="{:.2}" x2="{hx:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
            hy - 8.0,
            hy + 8.0
        );
        let ly = MARGIN_TOP + 16.0 + 20.0 * i as f64;
        let lx = MARGIN_LEFT + plot_w + 16.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&g.label)
        );
    }
    if let Some(c) = plot.criterion {
        let x = sx(c);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{MARGIN_TOP:.2}" x2="{x:.2}" y2="{base:.2}" stroke="black" stroke-dasharray="2,3"/>"#
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{kde, KdeOptions};

    fn group(label: &str, data: &[f64]) -> PlotGroup {
        let curve = kde(data, KdeOptions::default()).unwrap();
        PlotGroup {
            label: label.into(),
            estimate: data.iter().sum::<f64>() / data.len() as f64,
            curve,
        }
    }

    #[test]
    fn renders_curves_hashes_and_criterion() {
        let plot = DensityPlot {
            title: "t & u".into(),
            x_label: "estimate".into(),
            groups: vec![group("a", &[1.0, 2.0, 3.5]), group("b", &[2.0, 4.0, 5.0])],
            criterion: Some(3.0),
        };
        let svg = render_svg(&plot).unwrap();
        assert_eq!(svg.matches("<path").count(), 2);
        assert_eq!(svg.matches("stroke-dasharray").count(), 1);
        assert!(svg.contains("t &amp; u"));
        assert_eq!(svg, render_svg(&plot).unwrap());
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(nice_ticks(0.0, 10.0, 5), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
    }
}
