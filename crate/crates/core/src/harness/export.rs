//! CSV and SVG output.
//!
//! CSV numbers use 9 significant digits in `%g` style: fixed notation for
//! decimal exponents in `-4..9`, scientific otherwise, trailing zeros trimmed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::ode::SimulationTrace;

use super::compare::Comparison;
use super::sim::RunResult;

const SIG_DIGITS: usize = 9;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("trace has {samples} sample(s); at least two are needed (horizon shorter than one output step?)")]
    EmptyTrace { samples: usize },
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `%.9g`-style decimal text.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    // Rounding to 9 digits can bump the exponent, so read it off the rounded form.
    let sci = format!("{:.*e}", SIG_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_string()
    } else {
        format!("{}e{}{:02}", trim_fraction(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn check_trace(trace: &SimulationTrace) -> Result<(), ExportError> {
    if trace.len() < 2 {
        return Err(ExportError::EmptyTrace {
            samples: trace.len(),
        });
    }
    Ok(())
}

/// Header `t,<channels>` then one row per sample, LF terminated.
pub fn trace_csv(trace: &SimulationTrace) -> Result<String, ExportError> {
    check_trace(trace)?;
    let columns: Vec<&[f64]> = trace.columns().map(|(_, c)| c).collect();
    let mut out = String::with_capacity(trace.len() * (columns.len() + 1) * 14);
    out.push('t');
    for name in trace.names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (k, t) in trace.grid().iter().enumerate() {
        out.push_str(&format_number(*t));
        for c in &columns {
            out.push(',');
            out.push_str(&format_number(c[k]));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_text(path: &Path, contents: &str) -> Result<(), ExportError> {
    std::fs::write(path, contents).map_err(|source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn export_csv(result: &RunResult, path: &Path) -> Result<(), ExportError> {
    let text = trace_csv(&result.trace)?;
    write_text(path, &text)
}

pub fn export_svg(result: &RunResult, path: &Path) -> Result<(), ExportError> {
    check_trace(&result.trace)?;
    write_text(path, &run_svg(result))
}

pub fn export_comparison_csv(cmp: &Comparison, path: &Path) -> Result<(), ExportError> {
    write_text(path, &cmp.table_csv())
}

pub fn export_comparison_svg(cmp: &Comparison, path: &Path) -> Result<(), ExportError> {
    for run in cmp.runs() {
        check_trace(&run.trace)?;
    }
    write_text(path, &comparison_svg(cmp))
}

// ---- plotting ----

const PANEL_W: f64 = 520.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 48.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
/// Polylines are reduced to at most two points (min and max) per bucket.
const BUCKETS: usize = 800;

#[derive(Debug, Clone)]
pub struct Series<'a> {
    pub label: String,
    pub t: &'a [f64],
    pub v: &'a [f64],
}

#[derive(Debug, Clone)]
pub struct Panel<'a> {
    pub title: String,
    pub y_label: String,
    pub series: Vec<Series<'a>>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Indices kept when drawing `n` samples: per bucket the extremes, in order.
fn decimate(v: &[f64]) -> Vec<usize> {
    let n = v.len();
    if n <= 2 * BUCKETS {
        return (0..n).collect();
    }
    let mut keep = Vec::with_capacity(2 * BUCKETS + 2);
    for b in 0..BUCKETS {
        let lo = b * n / BUCKETS;
        let hi = ((b + 1) * n / BUCKETS).max(lo + 1);
        let (mut imin, mut imax) = (lo, lo);
        for k in lo..hi {
            if v[k] < v[imin] {
                imin = k;
            }
            if v[k] > v[imax] {
                imax = k;
            }
        }
        let (a, b) = if imin <= imax { (imin, imax) } else { (imax, imin) };
        keep.push(a);
        if b != a {
            keep.push(b);
        }
    }
    if *keep.last().expect("non-empty") != n - 1 {
        keep.push(n - 1);
    }
    keep
}

fn nice_step(range: f64, target: usize) -> f64 {
    let raw = range / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let m = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

/// Axis limits padded to tick multiples, and the ticks themselves.
fn axis(lo: f64, hi: f64) -> (f64, f64, Vec<f64>) {
    let (lo, hi) = if !(lo.is_finite() && hi.is_finite()) {
        (-1.0, 1.0)
    } else if hi - lo <= 1e-12 * lo.abs().max(hi.abs()).max(1e-300) {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    };
    let step = nice_step(hi - lo, 5);
    let start = (lo / step).floor() * step;
    let end = (hi / step).ceil() * step;
    let count = ((end - start) / step).round() as usize;
    let ticks = (0..=count).map(|k| start + k as f64 * step).collect();
    (start, end, ticks)
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0".into()
    } else {
        s
    }
}

fn render_panel(out: &mut String, panel: &Panel, x0: f64, y0: f64) {
    let pw = PANEL_W - MARGIN_L - MARGIN_R;
    let ph = PANEL_H - MARGIN_T - MARGIN_B;
    let (mut tmin, mut tmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &panel.series {
        for (&t, &v) in s.t.iter().zip(s.v) {
            if t.is_finite() && v.is_finite() {
                tmin = tmin.min(t);
                tmax = tmax.max(t);
                vmin = vmin.min(v);
                vmax = vmax.max(v);
            }
        }
    }
    if !(tmax > tmin) {
        tmin = 0.0;
        tmax = 1.0;
    }
    let (ylo, yhi, yticks) = axis(vmin, vmax);
    let xstep = nice_step(tmax - tmin, 5);
    let px = |t: f64| x0 + MARGIN_L + (t - tmin) / (tmax - tmin) * pw;
    let py = |v: f64| y0 + MARGIN_T + (1.0 - (v - ylo) / (yhi - ylo)) * ph;

    let _ = writeln!(out, r#"<g class="panel">"#);
    let _ = writeln!(
        out,
        r#"<rect x="{:.2}" y="{:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#,
        x0 + MARGIN_L,
        y0 + MARGIN_T
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        x0 + MARGIN_L + pw / 2.0,
        y0 + 22.0,
        escape(&panel.title)
    );
    let step = yticks.get(1).map_or(1.0, |b| b - yticks[0]);
    for &v in &yticks {
        let y = py(v);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#,
            x0 + MARGIN_L - 4.0,
            x0 + MARGIN_L,
            x0 + MARGIN_L - 6.0,
            y + 4.0,
            tick_label(v, step)
        );
    }
    let mut t = (tmin / xstep).ceil() * xstep;
    while t <= tmax + 1e-9 * xstep {
        let x = px(t);
        let ybase = y0 + MARGIN_T + ph;
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{ybase:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
            ybase + 4.0,
            ybase + 17.0,
            tick_label(t, xstep)
        );
        t += xstep;
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">t (s)</text>"#,
        x0 + MARGIN_L + pw / 2.0,
        y0 + PANEL_H - 8.0
    );
    let yc = y0 + MARGIN_T + ph / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{yc:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.2} {yc:.2})">{}</text>"#,
        x0 + 16.0,
        x0 + 16.0,
        escape(&panel.y_label)
    );
    for (k, s) in panel.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut pts = String::new();
        for i in decimate(s.v) {
            if s.v[i].is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", px(s.t[i]), py(s.v[i]));
            }
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
            pts.trim_end()
        );
        let lx = x0 + PANEL_W - MARGIN_R - 110.0;
        let ly = y0 + MARGIN_T + 14.0 + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    let _ = writeln!(out, "</g>");
}

/// Lays `panels` out row by row, `cols` per row.
pub fn render_svg(panels: &[Panel], cols: usize) -> String {
    let cols = cols.max(1).min(panels.len().max(1));
    let rows = panels.len().div_ceil(cols).max(1);
    let width = cols as f64 * PANEL_W;
    let height = rows as f64 * PANEL_H;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, panel) in panels.iter().enumerate() {
        let x0 = (k % cols) as f64 * PANEL_W;
        let y0 = (k / cols) as f64 * PANEL_H;
        render_panel(&mut out, panel, x0, y0);
    }
    out.push_str("</svg>\n");
    out
}

fn series<'a>(trace: &'a SimulationTrace, name: &str, label: &str) -> Option<Series<'a>> {
    Some(Series {
        label: label.to_string(),
        t: trace.grid(),
        v: trace.channel(name)?,
    })
}

/// Output vs tracked reference, control signal, and disturbance estimation
/// errors; panels whose channels are absent are skipped.
pub fn run_panels<'a>(trace: &'a SimulationTrace, title: &str) -> Vec<Panel<'a>> {
    type Layout<'s> = (&'s str, &'s str, &'s [(&'s str, &'s str)]);
    let layout: [Layout; 3] = [
        ("response", "output", &[("r1", "r1"), ("y", "y")]),
        ("control", "u", &[("u", "u")]),
        ("disturbance estimation error", "error", &[("e3", "e3"), ("zeta3", "ζ3")]),
    ];
    layout
        .iter()
        .filter_map(|(what, y_label, chans)| {
            let s: Vec<Series> = chans
                .iter()
                .filter_map(|(name, label)| series(trace, name, label))
                .collect();
            (!s.is_empty()).then(|| Panel {
                title: format!("{title}: {what}"),
                y_label: y_label.to_string(),
                series: s,
            })
        })
        .collect()
}

fn run_title(r: &RunResult) -> String {
    format!(
        "{} ({})",
        r.variant.label(),
        if r.noisy { "with noise" } else { "without noise" }
    )
}

pub fn run_svg(result: &RunResult) -> String {
    render_svg(&run_panels(&result.trace, &run_title(result)), 1)
}

/// 2×2 grid of responses: (a) reference without noise, (b) candidate without
/// noise, (c) reference with noise, (d) candidate with noise.
pub fn comparison_svg(cmp: &Comparison) -> String {
    let panels: Vec<Panel> = cmp
        .runs()
        .iter()
        .zip(["(a)", "(b)", "(c)", "(d)"])
        .map(|(run, tag)| Panel {
            title: format!("{tag} {}", run_title(run)),
            y_label: "output".into(),
            series: ["r1", "y"]
                .iter()
                .filter_map(|c| series(&run.trace, c, c))
                .collect(),
        })
        .collect();
    render_svg(&panels, 2)
}

/// Disturbance estimation errors of the candidate runs, `e3` against `ζ3`.
pub fn comparison_error_svg(cmp: &Comparison) -> String {
    let panels: Vec<Panel> = [&cmp.candidate.clean, &cmp.candidate.noisy]
        .iter()
        .zip(["(a)", "(b)"])
        .map(|(run, tag)| Panel {
            title: format!("{tag} {}", run_title(run)),
            y_label: "error".into(),
            series: [("e3", "e3"), ("zeta3", "ζ3")]
                .iter()
                .filter_map(|(c, l)| series(&run.trace, c, l))
                .collect(),
        })
        .collect();
    render_svg(&panels, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(-2.5), "-2.5");
        assert_eq!(format_number(0.1), "0.1");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333");
        assert_eq!(format_number(123456789.0), "123456789");
        assert_eq!(format_number(1234567891.0), "1.23456789e+09");
        assert_eq!(format_number(0.00012345), "0.00012345");
        assert_eq!(format_number(0.0000479142565), "4.79142565e-05");
        assert_eq!(format_number(1.5e-7), "1.5e-07");
        assert_eq!(format_number(9.9999999999), "10");
        assert_eq!(format_number(f64::NAN), "nan");
    }

    #[test]
    fn nine_digits_round_trip_closely() {
        for v in [std::f64::consts::PI, -1e-3 / 7.0, 6.02e23, 17.125] {
            let back: f64 = format_number(v).parse().unwrap();
            assert!(((back - v) / v).abs() < 1e-8, "{v}");
        }
    }

    fn trace_of(names: &[&str], n: usize) -> SimulationTrace {
        let mut tr = SimulationTrace::new(names.iter().map(|s| s.to_string()).collect());
        for k in 0..n {
            let t = k as f64 * 0.01;
            let row: Vec<f64> = (0..names.len()).map(|j| (t * (j + 1) as f64).sin()).collect();
            tr.push(t, &row);
        }
        tr
    }

    #[test]
    fn csv_has_header_plus_rows() {
        let tr = trace_of(&["a", "b"], 5);
        let csv = trace_csv(&tr).unwrap();
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with("t,a,b\n0,0,0\n"));
        assert!(!csv.contains('\r'));
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn csv_refuses_degenerate_trace() {
        let tr = trace_of(&["a"], 1);
        assert!(matches!(trace_csv(&tr), Err(ExportError::EmptyTrace { samples: 1 })));
    }

    #[test]
    fn single_channel_gives_one_panel() {
        let tr = trace_of(&["u"], 50);
        let svg = render_svg(&run_panels(&tr, "x"), 1);
        assert_eq!(svg.matches(r#"<g class="panel">"#).count(), 1);
    }

    #[test]
    fn decimation_keeps_extremes() {
        let mut v = vec![0.0; 100_000];
        v[54_321] = 9.0;
        v[77_777] = -4.0;
        let keep = decimate(&v);
        assert!(keep.len() <= 2 * BUCKETS + 1);
        assert!(keep.contains(&54_321) && keep.contains(&77_777));
        assert!(keep.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn axis_covers_data() {
        let (lo, hi, ticks) = axis(-0.93, 1.07);
        assert!(lo <= -0.93 && hi >= 1.07);
        assert_eq!(*ticks.first().unwrap(), lo);
        let (lo, hi, _) = axis(2.0, 2.0);
        assert!(lo < 2.0 && hi > 2.0);
    }
}
