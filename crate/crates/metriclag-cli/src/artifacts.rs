//! CSV and SVG emission. Both emitters are deterministic: identical inputs
//! produce identical bytes, so artifacts can be diffed across runs.

use std::fs;
use std::path::Path;

use metriclag::{Error, Result};

/// Shortest round-trip float text; whole numbers keep their decimal point.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Parameter(format!("cannot write `{}`: {e}", path.display())))?;
    let io_err = |e: csv::Error| Error::Parameter(format!("csv `{}`: {e}", path.display()));
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(row).map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| Error::Parameter(format!("csv `{}`: {e}", path.display())))?;
    Ok(())
}

/// One labeled curve of a line plot.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Series {
    pub fn new(label: &str, xs: Vec<f64>, ys: Vec<f64>) -> Series {
        Series { label: label.to_string(), xs, ys }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 20.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

fn data_range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        let pad = lo.abs().max(1.0) * 0.1;
        (lo - pad, hi + pad)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    }
}

/// Round ticks on the 1-2-5 ladder, at most `target + 2` of them.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    } * mag;
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(t);
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-4..1e6).contains(&a) {
        let s = format!("{v:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:e}")
    }
}

fn px(v: f64) -> String {
    format!("{v:.2}")
}

/// Render the plot body; factored out so tests can compare strings.
pub fn render_plot(series: &[Series]) -> Result<String> {
    if series.is_empty() {
        return Err(Error::Precondition("a plot needs at least one series".into()));
    }
    for s in series {
        if s.xs.is_empty() {
            return Err(Error::Precondition(format!("series `{}` is empty", s.label)));
        }
        if s.xs.len() != s.ys.len() {
            return Err(Error::Precondition(format!(
                "series `{}` has {} x values but {} y values",
                s.label,
                s.xs.len(),
                s.ys.len()
            )));
        }
        if s.xs.iter().chain(&s.ys).any(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!(
                "series `{}` contains non-finite values",
                s.label
            )));
        }
    }

    let (x_lo, x_hi) = data_range(series.iter().flat_map(|s| s.xs.iter().copied()));
    let (y_lo, y_hi) = data_range(series.iter().flat_map(|s| s.ys.iter().copied()));
    let sx = (WIDTH - MARGIN_L - MARGIN_R) / (x_hi - x_lo);
    let sy = (HEIGHT - MARGIN_T - MARGIN_B) / (y_hi - y_lo);
    let map_x = |v: f64| MARGIN_L + (v - x_lo) * sx;
    let map_y = |v: f64| HEIGHT - MARGIN_B - (v - y_lo) * sy;

    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));

    let x_ticks = nice_ticks(x_lo, x_hi, 6);
    let y_ticks = nice_ticks(y_lo, y_hi, 6);
    svg.push_str("<g stroke=\"#dddddd\" stroke-width=\"1\">\n");
    for &t in &x_ticks {
        let p = px(map_x(t));
        svg.push_str(&format!(
            "<line x1=\"{p}\" y1=\"{}\" x2=\"{p}\" y2=\"{}\"/>\n",
            px(MARGIN_T),
            px(HEIGHT - MARGIN_B)
        ));
    }
    for &t in &y_ticks {
        let p = px(map_y(t));
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{p}\" x2=\"{}\" y2=\"{p}\"/>\n",
            px(MARGIN_L),
            px(WIDTH - MARGIN_R)
        ));
    }
    svg.push_str("</g>\n");

    svg.push_str(&format!(
        "<g stroke=\"black\" stroke-width=\"1\">\n<line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\"/>\n<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\"/>\n</g>\n",
        l = px(MARGIN_L),
        r = px(WIDTH - MARGIN_R),
        t = px(MARGIN_T),
        b = px(HEIGHT - MARGIN_B)
    ));

    svg.push_str("<g font-family=\"monospace\" font-size=\"11\" fill=\"black\">\n");
    for &t in &x_ticks {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            px(map_x(t)),
            px(HEIGHT - MARGIN_B + 16.0),
            fmt_tick(t)
        ));
    }
    for &t in &y_ticks {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            px(MARGIN_L - 8.0),
            px(map_y(t) + 4.0),
            fmt_tick(t)
        ));
    }
    svg.push_str("</g>\n");

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s
            .xs
            .iter()
            .zip(&s.ys)
            .map(|(&x, &y)| format!("{},{}", px(map_x(x)), px(map_y(y))))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
    }

    svg.push_str("<g font-family=\"monospace\" font-size=\"11\" fill=\"black\">\n");
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = MARGIN_T + 14.0 * (i as f64 + 1.0);
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n",
            px(WIDTH - MARGIN_R - 150.0),
            px(y - 9.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            px(WIDTH - MARGIN_R - 136.0),
            px(y),
            s.label
        ));
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

/// Write a standalone SVG 1.1 line plot.
pub fn emit_plot(series: &[Series], path: &Path) -> Result<()> {
    let svg = render_plot(series)?;
    fs::write(path, svg)
        .map_err(|e| Error::Parameter(format!("cannot write `{}`: {e}", path.display())))
}
