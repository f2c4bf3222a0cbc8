//! Log-log SVG plot of a rate table.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, SpdeError};
use crate::experiment::{Axis, RateTable};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

const STRONG_COLOUR: &str = "#1f77b4";
const WEAK_COLOUR: &str = "#d62728";

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let (lo, hi) = self.x;
        LEFT + (x.log10() - lo) / (hi - lo) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let (lo, hi) = self.y;
        HEIGHT - BOTTOM - (y.log10() - lo) / (hi - lo) * (HEIGHT - TOP - BOTTOM)
    }
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        let l = v.log10();
        (lo.min(l), hi.max(l))
    });
    if !lo.is_finite() {
        return (-1.0, 0.0);
    }
    let pad = ((hi - lo) * 0.05).max(0.1);
    (lo - pad, hi + pad)
}

fn polyline(points: &[(f64, f64)], frame: &Frame, colour: &str, name: &str) -> String {
    let coords: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
        .collect();
    let mut s = format!(
        "<polyline class=\"data\" data-series=\"{name}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\" points=\"{}\"/>\n",
        coords.join(" ")
    );
    for (x, y) in points {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{colour}\"/>",
            frame.px(*x),
            frame.py(*y)
        );
    }
    s
}

/// Dashed line of the given slope through the series' first point.
fn reference_line(points: &[(f64, f64)], slope: f64, xs: (f64, f64), frame: &Frame, colour: &str) -> String {
    let (x0, y0) = points.first().copied().unwrap_or((xs.0, 1.0));
    let at = |x: f64| y0 * (x / x0).powf(slope);
    format!(
        "<line class=\"reference\" stroke=\"{colour}\" stroke-width=\"1\" stroke-dasharray=\"6,4\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\"/>\n",
        frame.px(xs.0),
        frame.py(at(xs.0)),
        frame.px(xs.1),
        frame.py(at(xs.1))
    )
}

/// Renders the table as an SVG document. Fails on a table without rows.
pub fn render_svg(table: &RateTable) -> Result<String> {
    if table.rows.is_empty() {
        return Err(SpdeError::Domain("cannot plot an empty rate table".into()));
    }
    let strong: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter(|r| r.strong_error > 0.0)
        .map(|r| (r.measure, r.strong_error))
        .collect();
    let weak: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter(|r| r.weak_error > 0.0)
        .map(|r| (r.measure, r.weak_error))
        .collect();
    let xs = table
        .rows
        .iter()
        .map(|r| r.measure)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let (weak_slope, strong_slope) = table.theoretical_slopes();
    let reference_at = |pts: &[(f64, f64)], slope: f64, x: f64| pts.first().map(|&(x0, y0)| y0 * (x / x0).powf(slope));
    let extremes = [xs.0, xs.1].into_iter().flat_map(|x| {
        [
            reference_at(&strong, strong_slope, x),
            reference_at(&weak, weak_slope, x),
        ]
        .into_iter()
        .flatten()
    });
    let frame = Frame {
        x: padded_range(table.rows.iter().map(|r| r.measure)),
        y: padded_range(
            strong
                .iter()
                .chain(&weak)
                .map(|p| p.1)
                .chain(extremes)
                .filter(|v| *v > 0.0 && v.is_finite()),
        ),
    };

    let x_label = match table.axis {
        Axis::Spatial => "1/N",
        Axis::Temporal => "time step",
    };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let (x_lo, y_lo) = (HEIGHT - BOTTOM, LEFT);
    let _ = writeln!(
        svg,
        "<path class=\"axes\" d=\"M{LEFT},{TOP} L{LEFT},{x_lo} L{},{x_lo}\" stroke=\"black\" fill=\"none\"/>",
        WIDTH - RIGHT
    );
    for decade in (frame.x.0.ceil() as i32)..=(frame.x.1.floor() as i32) {
        let px = frame.px(10f64.powi(decade));
        let _ = writeln!(
            svg,
            "<line x1=\"{px:.2}\" y1=\"{x_lo}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"black\"/><text x=\"{px:.2}\" y=\"{}\" text-anchor=\"middle\">1e{decade}</text>",
            x_lo + 5.0,
            x_lo + 20.0
        );
    }
    for decade in (frame.y.0.ceil() as i32)..=(frame.y.1.floor() as i32) {
        let py = frame.py(10f64.powi(decade));
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{py:.2}\" x2=\"{y_lo}\" y2=\"{py:.2}\" stroke=\"black\"/><text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">1e{decade}</text>",
            y_lo - 5.0,
            y_lo - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "<text class=\"x-label\" x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{x_label}</text>",
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        "<text class=\"y-label\" x=\"20\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.1})\">error</text>",
        TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
        TOP + (HEIGHT - TOP - BOTTOM) / 2.0
    );

    svg.push_str(&polyline(&strong, &frame, STRONG_COLOUR, "strong"));
    svg.push_str(&polyline(&weak, &frame, WEAK_COLOUR, "weak"));
    svg.push_str(&reference_line(&strong, strong_slope, xs, &frame, STRONG_COLOUR));
    svg.push_str(&reference_line(&weak, weak_slope, xs, &frame, WEAK_COLOUR));

    let lx = WIDTH - RIGHT + 15.0;
    let entries = [
        (STRONG_COLOUR, false, "strong error".to_string()),
        (WEAK_COLOUR, false, "weak error".to_string()),
        (STRONG_COLOUR, true, format!("slope {strong_slope}")),
        (WEAK_COLOUR, true, format!("slope {weak_slope}")),
    ];
    svg.push_str("<g class=\"legend\">\n");
    for (i, (colour, dashed, label)) in entries.iter().enumerate() {
        let y = TOP + 20.0 + 20.0 * i as f64;
        let dash = if *dashed { " stroke-dasharray=\"6,4\"" } else { "" };
        let _ = writeln!(
            svg,
            "<path d=\"M{lx},{y} h24\" stroke=\"{colour}\" stroke-width=\"2\"{dash}/><text x=\"{}\" y=\"{}\">{label}</text>",
            lx + 30.0,
            y + 4.0
        );
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

/// Writes the plot to `path`. Nothing is created when rendering fails.
pub fn emit_plot(table: &RateTable, path: &Path) -> Result<()> {
    let svg = render_svg(table)?;
    std::fs::write(path, svg).map_err(|e| SpdeError::io(path, e))
}
