//! Self-contained SVG rendering for the information-gain figure.
//!
//! One plot kind: the predictive information estimate over steps, with the
//! trigger threshold drawn as a dashed level and the first crossing marked.
//! Pure string assembly — no renderer, no external assets — so the output
//! opens anywhere and diffs cleanly.

use crate::error::Error;
use crate::trace::TraceRow;
use crate::Result;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 48.0;

/// Axis mapping from data space onto the pixel box.
struct Scale {
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Scale {
    fn x(&self, t: f64) -> f64 {
        MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) * (t / self.x_max.max(1.0))
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(1e-12);
        let frac = (v - self.y_min) / span;
        MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) * (1.0 - frac)
    }
}

/// Render the information-gain curve with the threshold level.
///
/// The y-range covers zero, the curve, and the threshold with 5% headroom;
/// the first row with `i_pred > gamma` gets a crossing marker. Empty input
/// is rejected.
pub fn fig3_svg(rows: &[TraceRow], gamma: f64) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("fig3 plot needs at least one row"));
    }
    let x_max = rows.last().map(|r| r.t as f64).unwrap_or(0.0);
    let mut y_hi = gamma;
    for r in rows {
        y_hi = y_hi.max(r.i_pred);
    }
    let scale = Scale { x_max, y_min: 0.0, y_max: (y_hi * 1.05).max(1e-3) };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"monospace\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(
        "  <text x=\"16\" y=\"22\" font-size=\"14\">predictive information gain vs step</text>\n",
    );

    // Axes.
    let x0 = scale.x(0.0);
    let x1 = scale.x(scale.x_max);
    let y0 = scale.y(scale.y_min);
    let y1 = scale.y(scale.y_max);
    svg.push_str(&format!(
        "  <line x1=\"{x0:.1}\" y1=\"{y0:.1}\" x2=\"{x1:.1}\" y2=\"{y0:.1}\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "  <line x1=\"{x0:.1}\" y1=\"{y0:.1}\" x2=\"{x0:.1}\" y2=\"{y1:.1}\" stroke=\"black\"/>\n"
    ));
    for i in 0..=4 {
        let ft = scale.x_max * i as f64 / 4.0;
        let px = scale.x(ft);
        svg.push_str(&format!(
            "  <line x1=\"{px:.1}\" y1=\"{y0:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
            y0 + 4.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{ft:.0}</text>\n",
            y0 + 18.0
        ));
        let fv = scale.y_min + (scale.y_max - scale.y_min) * i as f64 / 4.0;
        let py = scale.y(fv);
        svg.push_str(&format!(
            "  <line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{x0:.1}\" y2=\"{py:.1}\" stroke=\"black\"/>\n",
            x0 - 4.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{fv:.3}</text>\n",
            x0 - 8.0,
            py + 4.0
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">step</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 10.0
    ));

    // Threshold level, dashed, with its value labeled.
    let gy = scale.y(gamma);
    svg.push_str(&format!(
        "  <line x1=\"{x0:.1}\" y1=\"{gy:.1}\" x2=\"{x1:.1}\" y2=\"{gy:.1}\" \
         stroke=\"#c0392b\" stroke-dasharray=\"6 4\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" fill=\"#c0392b\" text-anchor=\"end\">gamma = {gamma}</text>\n",
        x1,
        gy - 6.0
    ));

    // The curve itself.
    let points: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.1},{:.1}", scale.x(r.t as f64), scale.y(r.i_pred)))
        .collect();
    svg.push_str(&format!(
        "  <polyline fill=\"none\" stroke=\"#2c5f8a\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        points.join(" ")
    ));

    // First crossing above the threshold, if any.
    if let Some(r) = rows.iter().find(|r| r.i_pred > gamma) {
        let cx = scale.x(r.t as f64);
        let cy = scale.y(r.i_pred);
        svg.push_str(&format!(
            "  <circle cx=\"{cx:.1}\" cy=\"{cy:.1}\" r=\"4\" fill=\"#c0392b\"/>\n"
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" fill=\"#c0392b\">crossing t = {}</text>\n",
            cx + 8.0,
            cy - 8.0,
            r.t
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows_with(i_pred: &[f64]) -> Vec<TraceRow> {
        i_pred
            .iter()
            .enumerate()
            .map(|(t, &v)| {
                let mut r = TraceRow::default();
                r.t = t as u64;
                r.i_pred = v;
                r
            })
            .collect()
    }

    #[test]
    fn empty_rows_are_rejected() {
        assert!(matches!(fig3_svg(&[], 0.1), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn svg_has_curve_threshold_and_axes() {
        let svg = fig3_svg(&rows_with(&[0.0, 0.05, 0.2, 0.3]), 0.1).unwrap();
        assert!(svg.starts_with("<svg xmlns="));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("stroke-dasharray=\"6 4\""));
        assert!(svg.contains("gamma = 0.1"));
        // One coordinate pair per row.
        let points = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(points.split(' ').count(), 4);
    }

    #[test]
    fn crossing_marker_points_at_the_first_exceedance() {
        let svg = fig3_svg(&rows_with(&[0.0, 0.05, 0.2, 0.3]), 0.1).unwrap();
        assert!(svg.contains("crossing t = 2"));
        let flat = fig3_svg(&rows_with(&[0.0, 0.05]), 0.1).unwrap();
        assert!(!flat.contains("crossing"));
    }

    #[test]
    fn no_external_references_inside() {
        let svg = fig3_svg(&rows_with(&[0.0, 0.2]), 0.1).unwrap();
        assert!(!svg.contains("http://") || svg.matches("http://").count() == 1);
        assert!(svg.contains("http://www.w3.org/2000/svg"));
        assert!(!svg.contains("href"));
    }
}
