//! Static 2-D scatter plots.

use std::fmt::Write;

use geodesica::{Configuration, Error};

/// Colors cycled by label.
pub const PALETTE: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

const WIDTH_PX: f64 = 600.0;
const MARGIN: f64 = 0.05;
const RADIUS: f64 = 0.005;

/// Axis extent with a 5% margin each side; a degenerate axis spans 1.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mid = if hi > lo { lo } else { lo - 0.5 };
    (mid - MARGIN * span, span * (1.0 + 2.0 * MARGIN))
}

/// One circle per row of `z`, y pointing up. Optional `labels` pick colors
/// from [`PALETTE`].
pub fn emit_svg_scatter(z: &Configuration, labels: Option<&[usize]>) -> geodesica::Result<String> {
    if z.dim() != 2 {
        return Err(Error::ShapeMismatch {
            expected: "a 2-column configuration".into(),
            got: format!("{} columns", z.dim()),
        });
    }
    if let Some(l) = labels {
        if l.len() != z.len() {
            return Err(Error::ShapeMismatch { expected: format!("{} labels", z.len()), got: l.len().to_string() });
        }
    }
    let c = z.coords();
    let fold =
        |k: usize| c.column(k).iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let (x_lo, x_hi) = fold(0);
    let (y_lo, y_hi) = fold(1);
    let (x0, w) = padded(x_lo, x_hi);
    // SVG y grows downward, so plot -y
    let (y0, h) = padded(-y_hi, -y_lo);
    let r = RADIUS * w.max(h);
    let height_px = (WIDTH_PX * h / w).round().max(1.0);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH_PX}" height="{height_px}" viewBox="{x0:.6} {y0:.6} {w:.6} {h:.6}">"#
    );
    let _ = writeln!(out, r#"<rect x="{x0:.6}" y="{y0:.6}" width="{w:.6}" height="{h:.6}" fill="white"/>"#);
    for (i, row) in c.rows().into_iter().enumerate() {
        let color = PALETTE[labels.map_or(0, |l| l[i] % PALETTE.len())];
        let _ = writeln!(out, r#"<circle cx="{:.6}" cy="{:.6}" r="{r:.6}" fill="{color}"/>"#, row[0], -row[1]);
    }
    out.push_str("</svg>\n");
    Ok(out)
}
