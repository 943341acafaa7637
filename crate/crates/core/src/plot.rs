//! Minimal deterministic SVG line plots.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Straight line of the given slope (in plot coordinates, i.e. log-log when
/// `log_log` is set) through `anchor`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Guide {
    pub label: String,
    pub slope: f64,
    pub anchor: (f64, f64),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub log_log: bool,
    pub guides: Vec<Guide>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Input { field: "plot".into(), message: msg.into() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// SVG document for `spec`; identical specs give identical bytes.
pub fn render_svg(spec: &PlotSpec) -> Result<String> {
    if spec.series.iter().all(|s| s.points.is_empty()) {
        return Err(invalid("no points to plot"));
    }
    let tf = |v: f64| if spec.log_log { v.log10() } else { v };
    let mut pts: Vec<Vec<(f64, f64)>> = Vec::with_capacity(spec.series.len());
    for s in &spec.series {
        let mut out = Vec::with_capacity(s.points.len());
        for &(x, y) in &s.points {
            let (u, v) = (tf(x), tf(y));
            if !u.is_finite() || !v.is_finite() {
                return Err(invalid(format!("point ({x}, {y}) of series {:?} is not plottable", s.label)));
            }
            out.push((u, v));
        }
        pts.push(out);
    }
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(u, v) in all {
        x0 = x0.min(u);
        x1 = x1.max(u);
        y0 = y0.min(v);
        y1 = y1.max(v);
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |u: f64| MARGIN + (u - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |v: f64| HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect class="frame" x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(svg, r#"<text x="{}" y="30" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(&spec.title));
    let axis = |l: &str| if spec.log_log { format!("log10 {l}") } else { l.to_string() };
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0,
        escape(&axis(&spec.x_label))
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 15 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(&axis(&spec.y_label))
    );
    for (k, (lo, hi)) in [(x0, x1), (y0, y1)].into_iter().enumerate() {
        for t in 0..=4 {
            let v = lo + (hi - lo) * t as f64 / 4.0;
            let (x, y, anchor) = if k == 0 { (sx(v), HEIGHT - MARGIN + 16.0, "middle") } else { (MARGIN - 6.0, sy(v) + 4.0, "end") };
            let _ = writeln!(svg, r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-size="10">{v:.3}</text>"#);
        }
    }
    for (k, (s, p)) in spec.series.iter().zip(&pts).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = p.iter().map(|&(u, v)| format!("{:.2},{:.2}", sx(u), sy(v))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-label="{}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            escape(&s.label),
            coords.join(" ")
        );
        for &(u, v) in p {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(u), sy(v));
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            MARGIN + 10.0,
            MARGIN + 16.0 + 14.0 * k as f64,
            escape(&s.label)
        );
    }
    for (k, g) in spec.guides.iter().enumerate() {
        let (ax, ay) = (tf(g.anchor.0), tf(g.anchor.1));
        if !ax.is_finite() || !ay.is_finite() || !g.slope.is_finite() {
            return Err(invalid(format!("guide {:?} is not plottable", g.label)));
        }
        let line = |u: f64| ay + g.slope * (u - ax);
        let _ = writeln!(
            svg,
            r#"<line class="guide" data-slope="{}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6 4"/>"#,
            g.slope,
            sx(x0),
            sy(line(x0)),
            sx(x1),
            sy(line(x1))
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" fill="gray" text-anchor="end">{}</text>"#,
            WIDTH - MARGIN - 10.0,
            MARGIN + 16.0 + 14.0 * k as f64,
            escape(&g.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot(spec: &PlotSpec, path: &Path) -> Result<()> {
    let svg = render_svg(spec)?;
    std::fs::write(path, svg).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
