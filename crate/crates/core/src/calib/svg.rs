//! Minimal SVG box plots of per-group R² distributions.

use std::fmt::Write;

use super::QuartileStats;

pub struct BoxSeries {
    pub label: String,
    pub stats: QuartileStats,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 50.0;

/// Renders one box per series on a shared y axis. Axis bounds cover
/// `[min(0, lowest whisker), 1]`.
pub fn boxplot_svg(title: &str, series: &[BoxSeries]) -> String {
    let lo = series
        .iter()
        .map(|s| s.stats.min)
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::min);
    let hi = 1.0f64.max(series.iter().map(|s| s.stats.max).fold(f64::MIN, f64::max));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let y = |v: f64| HEIGHT - MARGIN - (v.clamp(lo, hi) - lo) / span * (HEIGHT - 2.0 * MARGIN);
    let slot = (WIDTH - 2.0 * MARGIN) / series.len().max(1) as f64;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{}" stroke="black"/>"#,
        HEIGHT - MARGIN
    );
    for k in 0..=4 {
        let v = lo + span * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.2}</text>"#,
            MARGIN - 4.0,
            y(v) + 4.0
        );
    }
    for (i, s) in series.iter().enumerate() {
        let cx = MARGIN + slot * (i as f64 + 0.5);
        let half = slot * 0.25;
        let q = &s.stats;
        let _ = writeln!(
            out,
            r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#,
            y(q.min),
            y(q.max)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="steelblue" fill-opacity="0.5" stroke="black"/>"#,
            cx - half,
            y(q.q3),
            2.0 * half,
            (y(q.q1) - y(q.q3)).max(0.5)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="darkred" stroke-width="2"/>"#,
            cx - half,
            y(q.median),
            cx + half,
            y(q.median)
        );
        let _ = writeln!(
            out,
            r#"<text x="{cx:.1}" y="{}" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN + 16.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
