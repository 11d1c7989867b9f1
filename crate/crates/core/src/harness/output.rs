//! CSV and SVG artifacts.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every `f64` exactly. Lines end in `\n` on every platform.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::run::{RunResult, StepRecord};

pub const CSV_HEADER: &str = "t,p_t,loss_online,loss_reference,cum_online,cum_reference,regret_to_t,normalized_regret_to_t";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn records_to_csv(records: &[StepRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.t,
            fmt_f64(r.p_t),
            fmt_f64(r.loss_online),
            fmt_f64(r.loss_reference),
            fmt_f64(r.cum_online),
            fmt_f64(r.cum_reference),
            fmt_f64(r.regret_to_t),
            fmt_f64(r.normalized_regret_to_t),
        );
    }
    out
}

pub fn emit_csv(r: &RunResult, path: &Path) -> Result<()> {
    fs::write(path, records_to_csv(&r.records))?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<StepRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        _ => return Err(Error::InvalidInput("missing or unexpected CSV header".into())),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::InvalidInput(format!("malformed CSV row {}", i + 2));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 8 {
                return Err(bad());
            }
            let f = |k: usize| fields[k].parse::<f64>().map_err(|_| bad());
            Ok(StepRecord {
                t: fields[0].parse().map_err(|_| bad())?,
                p_t: f(1)?,
                loss_online: f(2)?,
                loss_reference: f(3)?,
                cum_online: f(4)?,
                cum_reference: f(5)?,
                regret_to_t: f(6)?,
                normalized_regret_to_t: f(7)?,
            })
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<StepRecord>> {
    parse_csv(&fs::read_to_string(path)?)
}

/// One curve of normalized regret against `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveSeries {
    pub p_max: f64,
    pub points: Vec<(usize, f64)>,
}

impl CurveSeries {
    /// Normalized regret against `t` read off a run's records.
    pub fn from_run(p_max: f64, r: &RunResult) -> Self {
        Self {
            p_max,
            points: r.records.iter().map(|x| (x.t, x.normalized_regret_to_t)).collect(),
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 20.0;
const MARGIN_B: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Axis extents `(x_min, x_max, y_min, y_max)` covering every point.
pub fn plot_extents(series: &[CurveSeries]) -> Option<(f64, f64, f64, f64)> {
    let mut it = series.iter().flat_map(|s| s.points.iter());
    let &(t0, y0) = it.next()?;
    let init = (t0 as f64, t0 as f64, y0, y0);
    let (mut x0, mut x1, mut y0, mut y1) = it.fold(init, |(a, b, c, d), &(t, y)| {
        (a.min(t as f64), b.max(t as f64), c.min(y), d.max(y))
    });
    if x1 == x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    Some((x0, x1, y0, y1))
}

pub fn render_svg(series: &[CurveSeries]) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::InvalidInput("no data series to plot".into()));
    }
    if series.iter().flat_map(|s| &s.points).any(|(_, y)| !y.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let (x0, x1, y0, y1) = plot_extents(series).expect("non-empty");
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_T + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect class="frame" x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(fx),
            HEIGHT - MARGIN_B + 18.0,
            trim_num(fx)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_L - 6.0,
            sy(fy) + 4.0,
            trim_num(fy)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">T</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">normalized regret</text>"#,
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0
    );
    for (i, series_i) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = series_i
            .points
            .iter()
            .map(|&(t, y)| format!("{:.2},{:.2}", sx(t as f64), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN_T + 14.0 + 16.0 * i as f64;
        let lx = WIDTH - MARGIN_R - 110.0;
        let _ = writeln!(
            s,
            r#"<g class="legend"><line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">p_max = {}</text></g>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0,
            lx + 26.0,
            ly,
            trim_num(series_i.p_max)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn trim_num(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

/// Writes the chart; an empty series list is an error and creates no file.
pub fn emit_plot(series: &[CurveSeries], path: &Path) -> Result<()> {
    let svg = render_svg(series)?;
    fs::write(path, svg)?;
    Ok(())
}
