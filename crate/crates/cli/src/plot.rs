//! Static SVG line plots, one stacked panel per series.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const PANEL_H: f64 = 150.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_Y: f64 = 24.0;

/// Render `series` (name, values) against the shared abscissa `t`.
pub fn line_panels(t: &[f64], series: &[(&str, Vec<f64>)]) -> String {
    let height = series.len() as f64 * (PANEL_H + MARGIN_Y) + MARGIN_Y;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (t0, t1) = bounds(t);
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    for (k, (name, ys)) in series.iter().enumerate() {
        let top = MARGIN_Y + k as f64 * (PANEL_H + MARGIN_Y);
        let (y0, y1) = bounds(ys);
        let _ = writeln!(
            svg,
            r#"<rect x="{MARGIN_L}" y="{top}" width="{plot_w}" height="{PANEL_H}" fill="none" stroke="grey"/>"#
        );
        let _ = writeln!(svg, r#"<text x="4" y="{}">{}</text>"#, top + PANEL_H / 2.0, escape(name));
        let _ = writeln!(svg, r#"<text x="4" y="{}">{}</text>"#, top + 10.0, fmt_tick(y1));
        let _ = writeln!(svg, r#"<text x="4" y="{}">{}</text>"#, top + PANEL_H, fmt_tick(y0));
        let mut points = String::new();
        for (&x, &y) in t.iter().zip(ys) {
            if !(x.is_finite() && y.is_finite()) {
                continue;
            }
            let px = MARGIN_L + (x - t0) / (t1 - t0) * plot_w;
            let py = top + PANEL_H - (y - y0) / (y1 - y0) * PANEL_H;
            let _ = write!(points, "{px:.2},{py:.2} ");
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
            points.trim_end()
        );
    }
    let bottom = height - 6.0;
    let _ = writeln!(svg, r#"<text x="{MARGIN_L}" y="{bottom}">t = {}</text>"#, fmt_tick(t0));
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{bottom}" text-anchor="end">t = {}</text>"#,
        WIDTH - MARGIN_R,
        fmt_tick(t1)
    );
    svg.push_str("</svg>\n");
    svg
}

// flat or empty series still get a drawable range
fn bounds(v: &[f64]) -> (f64, f64) {
    let (lo, hi) = v
        .iter()
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * lo.abs().max(hi.abs()).max(1e-300) {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() * 1e-6 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn fmt_tick(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e4) {
        format!("{x:.3e}")
    } else {
        format!("{x:.4}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
