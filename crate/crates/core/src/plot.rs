//! Standalone SVG line charts of the occupancy-product means.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::experiments::ConjectureRow;
use crate::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const X_LABEL: &str = "value of n (in log scale with base 10)";
const Y_LABEL: &str = "value of expectation approximated by averaging";

/// Axis range padded so a single point or a flat series still gets a
/// nonempty span.
fn span(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo > 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = 0.5 * (1e-3 + lo.abs() * 0.1);
        (lo - pad, hi + pad)
    }
}

fn ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// SVG text for one series `(n, mean, stderr)` at prefactor `big_c`.
pub fn series_svg(big_c: f64, points: &[(usize, f64, f64)]) -> Result<String> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("nothing to plot".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).log10()).collect();
    let (x0, x1) = span(
        xs.iter().copied().fold(f64::INFINITY, f64::min),
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = span(
        points.iter().map(|p| p.1 - p.2).fold(f64::INFINITY, f64::min),
        points.iter().map(|p| p.1 + p.2).fold(f64::NEG_INFINITY, f64::max),
    );
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">C = {big_c}</text>"#,
        WIDTH / 2.0
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for t in ticks(x0, x1, 5) {
        let _ = writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="black"/><text x="{0:.2}" y="{3:.2}" text-anchor="middle">{4:.2}</text>"#,
            px(t),
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 18.0,
            t
        );
    }
    for t in ticks(y0, y1, 5) {
        let _ = writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="black"/><text x="{3:.2}" y="{4:.2}" text-anchor="end">{5:.4}</text>"#,
            LEFT - 5.0,
            py(t),
            LEFT,
            LEFT - 8.0,
            py(t) + 4.0,
            t
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{X_LABEL}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0:.2}" text-anchor="middle" transform="rotate(-90 16 {0:.2})">{Y_LABEL}</text>"#,
        TOP + plot_h / 2.0
    );

    let path: Vec<String> = xs
        .iter()
        .zip(points)
        .map(|(&x, p)| format!("{:.2},{:.2}", px(x), py(p.1)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
        path.join(" ")
    );
    for (&x, p) in xs.iter().zip(points) {
        let (cx, lo, hi) = (px(x), py(p.1 - p.2), py(p.1 + p.2));
        let _ = writeln!(
            s,
            r#"<line x1="{cx:.2}" y1="{lo:.2}" x2="{cx:.2}" y2="{hi:.2}" stroke="steelblue"/><circle cx="{cx:.2}" cy="{:.2}" r="2.5" fill="steelblue"/>"#,
            py(p.1)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes one chart per value of `C` into `dir` as `conjecture_C<C>.svg`,
/// in order of first appearance, and returns the paths.
pub fn render_plot(rows: &[ConjectureRow], dir: &Path) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter("empty conjecture table".into()));
    }
    let mut cs: Vec<f64> = Vec::new();
    for r in rows {
        if !cs.contains(&r.big_c) {
            cs.push(r.big_c);
        }
    }
    let mut written = Vec::with_capacity(cs.len());
    for big_c in cs {
        let points: Vec<(usize, f64, f64)> = rows
            .iter()
            .filter(|r| r.big_c == big_c)
            .map(|r| (r.n, r.mean, r.stderr))
            .collect();
        let path = dir.join(format!("conjecture_C{big_c}.svg"));
        std::fs::write(&path, series_svg(big_c, &points)?).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
