//! Hand-written SVG: the two physical boundaries, and monitor traces along a branch.

use std::fmt::Write;

use num_complex::Complex64;

use crate::boundary;
use crate::cli_io::rows::BranchRow;
use crate::diagnostics::MONITOR_NAMES;
use crate::error::Result;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const PAD: f64 = 48.0;
const COLORS: [&str; 6] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#a6761d"];

/// Affine map from data coordinates to the SVG canvas (y up).
struct Frame {
    x0: f64,
    y0: f64,
    sx: f64,
    sy: f64,
}

impl Frame {
    fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64, equal: bool) -> Self {
        let (w, h) = (WIDTH - 2.0 * PAD, HEIGHT - 2.0 * PAD);
        let dx = (xmax - xmin).max(1e-12);
        let dy = (ymax - ymin).max(1e-12);
        let (mut sx, mut sy) = (w / dx, h / dy);
        if equal {
            sx = sx.min(sy);
            sy = sx;
        }
        let cx = 0.5 * (xmin + xmax);
        let cy = 0.5 * (ymin + ymax);
        Self { x0: WIDTH / 2.0 - sx * cx, y0: HEIGHT / 2.0 + sy * cy, sx, sy }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (self.x0 + self.sx * x, self.y0 - self.sy * y)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{title}</text>"#, WIDTH / 2.0);
}

fn polyline(out: &mut String, pts: &[(f64, f64)], style: &str, closed: bool) {
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
    let tag = if closed { "polygon" } else { "polyline" };
    let _ = writeln!(out, r#"<{tag} points="{}" {style}/>"#, coords.join(" "));
}

/// Both patch boundaries `z = +-(eps phi(w) + l)` for one row.
pub fn contour_svg(row: &BranchRow) -> Result<String> {
    let b = row.boundary()?;
    let m = boundary::min_nodes(b.n_modes()).max(512);
    let m = m + m % 2;
    let phi = boundary::eval_phi(&b, m, 0.0)?;
    let right: Vec<Complex64> = phi.values.iter().map(|p| b.eps() * p + b.l()).collect();
    let extent = right.iter().fold(0.0_f64, |acc, z| acc.max(z.re.abs()).max(z.im.abs())) * 1.1;
    let frame = Frame::new(-extent, extent, -extent, extent, true);
    let speed = if row.omega.is_some() { "Omega" } else { "V" };
    let title = format!("{} pair, eps = {:.6}, {speed} = {:.8}", row.pair_kind, row.eps, row.speed_value());
    let mut out = String::new();
    header(&mut out, &title);
    let axes = [frame.map(-extent, 0.0), frame.map(extent, 0.0)];
    polyline(&mut out, &axes, r##"fill="none" stroke="#bbbbbb" stroke-width="1""##, false);
    let axes = [frame.map(0.0, -extent), frame.map(0.0, extent)];
    polyline(&mut out, &axes, r##"fill="none" stroke="#bbbbbb" stroke-width="1""##, false);
    for sign in [1.0, -1.0] {
        let pts: Vec<(f64, f64)> = right.iter().map(|z| frame.map(sign * z.re, sign * z.im)).collect();
        polyline(&mut out, &pts, r##"fill="#c6dbef" stroke="#08519c" stroke-width="1.5""##, true);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// `log10` of the six scaled monitors against arclength.
pub fn monitor_svg(rows: &[BranchRow]) -> String {
    let series: Vec<Vec<(f64, f64)>> = (0..6)
        .map(|k| {
            rows.iter()
                .filter_map(|r| {
                    let mut v = r.monitors.scaled(r.l);
                    v[5] = r.monitors.eps / r.l;
                    let y = v[k];
                    (y.is_finite() && y > 0.0).then(|| (r.s, y.log10()))
                })
                .collect()
        })
        .collect();
    let all = series.iter().flatten();
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in all {
        xmin = xmin.min(*x);
        xmax = xmax.max(*x);
        ymin = ymin.min(*y);
        ymax = ymax.max(*y);
    }
    if !xmin.is_finite() {
        (xmin, xmax, ymin, ymax) = (0.0, 1.0, -1.0, 1.0);
    }
    if xmax - xmin < 1e-12 {
        xmax = xmin + 1.0;
    }
    let margin = 0.05 * (ymax - ymin).max(0.5);
    let frame = Frame::new(xmin, xmax, ymin - margin, ymax + margin, false);
    let mut out = String::new();
    header(&mut out, "scaled monitors (log10) along the branch");
    let base = [frame.map(xmin, ymin - margin), frame.map(xmax, ymin - margin)];
    polyline(&mut out, &base, r##"fill="none" stroke="#444444" stroke-width="1""##, false);
    let _ = writeln!(
        out,
        r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="11">s = {xmin:.4}</text>"#,
        base[0].0,
        base[0].1 + 16.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="11" text-anchor="end">s = {xmax:.4}</text>"#,
        base[1].0,
        base[1].1 + 16.0
    );
    for (k, pts) in series.iter().enumerate() {
        let mapped: Vec<(f64, f64)> = pts.iter().map(|(x, y)| frame.map(*x, *y)).collect();
        let style = format!(r#"fill="none" stroke="{}" stroke-width="1.5""#, COLORS[k]);
        polyline(&mut out, &mapped, &style, false);
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="11" fill="{}">{}</text>"#,
            WIDTH - PAD - 90.0,
            PAD + 14.0 * k as f64,
            COLORS[k],
            MONITOR_NAMES[k]
        );
    }
    out.push_str("</svg>\n");
    out
}
