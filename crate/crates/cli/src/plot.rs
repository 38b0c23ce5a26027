//! Minimal self-contained SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context};
use vdmkit::protocols::{ConvergenceReport, RateCurve, SweepResult};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
    /// Horizontal reference lines.
    pub guides: Vec<f64>,
    /// Vertical marker, e.g. the convergence sample size.
    pub marker: Option<f64>,
}

impl From<&ConvergenceReport> for Chart {
    fn from(r: &ConvergenceReport) -> Self {
        let m = r.config.margin * r.target_value.abs();
        Chart {
            title: format!("{} convergence", r.metric),
            x_label: "sample size".into(),
            y_label: "mean distance".into(),
            points: r.points.iter().map(|p| (p.n as f64, p.mean)).collect(),
            guides: vec![r.target_value - m, r.target_value, r.target_value + m],
            marker: r.converged_at.map(|n| n as f64),
        }
    }
}

impl From<&RateCurve> for Chart {
    fn from(r: &RateCurve) -> Self {
        Chart {
            title: format!("{} convergence rate", r.metric),
            x_label: "sample size".into(),
            y_label: "relative difference".into(),
            points: r.points.iter().map(|p| (p.n as f64, p.rate)).collect(),
            guides: vec![0.0],
            marker: None,
        }
    }
}

impl From<&SweepResult> for Chart {
    fn from(r: &SweepResult) -> Self {
        Chart {
            title: format!("{} sweep", r.metric),
            x_label: "level".into(),
            y_label: "distance".into(),
            points: r.levels.iter().copied().zip(r.values.iter().copied()).collect(),
            guides: Vec::new(),
            marker: None,
        }
    }
}

fn span(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - pad, hi + pad)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(chart: &Chart) -> anyhow::Result<String> {
    if chart.points.is_empty() {
        bail!("nothing to plot: the report has no points");
    }
    let xs = chart.points.iter().map(|p| p.0);
    let ys = chart.points.iter().map(|p| p.1).chain(chart.guides.iter().copied());
    let (x0, x1) = span(xs.clone().fold(f64::INFINITY, f64::min), xs.fold(f64::NEG_INFINITY, f64::max));
    let (y0, y1) = span(ys.clone().fold(f64::INFINITY, f64::min), ys.fold(f64::NEG_INFINITY, f64::max));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&chart.title)
    );
    let _ = writeln!(
        s,
        r#"<g stroke="black"><line x1="{m}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}"/></g>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN
    );
    for (v, anchor_x, anchor_y) in [(x0, sx(x0), HEIGHT - MARGIN + 16.0), (x1, sx(x1), HEIGHT - MARGIN + 16.0)] {
        let _ = writeln!(s, r#"<text x="{anchor_x:.2}" y="{anchor_y:.2}" text-anchor="middle">{v:.4}</text>"#);
    }
    for v in [y0, y1] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.4}</text>"#,
            MARGIN - 6.0,
            sy(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(&chart.y_label)
    );
    for g in &chart.guides {
        let _ = writeln!(
            s,
            r##"<line class="guide" x1="{MARGIN}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
            WIDTH - MARGIN,
            y = sy(*g)
        );
    }
    if let Some(m) = chart.marker {
        let _ = writeln!(
            s,
            r##"<line class="marker" x1="{x:.2}" y1="{MARGIN}" x2="{x:.2}" y2="{}" stroke="#c33"/>"##,
            HEIGHT - MARGIN,
            x = sx(m)
        );
    }
    let coords: Vec<String> = chart
        .points
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    if coords.len() > 1 {
        let _ = writeln!(
            s,
            r##"<polyline fill="none" stroke="#1f5fbf" stroke-width="2" points="{}"/>"##,
            coords.join(" ")
        );
    }
    for &(x, y) in &chart.points {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f5fbf"/>"##,
            sx(x),
            sy(y)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(chart: &Chart, path: &Path) -> anyhow::Result<()> {
    let svg = render(chart)?;
    std::fs::write(path, svg).with_context(|| format!("writing plot {}", path.display()))
}
