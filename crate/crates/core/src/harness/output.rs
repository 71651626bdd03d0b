//! CSV tables and SVG line charts of a sweep.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::reflection::ReflectionMode;

use super::{SweepResult, SweepRow};

pub const CSV_HEADER: [&str; 10] = [
    "experiment",
    "sweep_param",
    "sweep_value",
    "mode",
    "metric_name",
    "metric_mean",
    "metric_std",
    "mean_modulus",
    "trials_ok",
    "trials_failed",
];

/// Scientific notation with 17 significant digits, enough to round-trip any `f64`.
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Writes one row per sweep point and mode. Timings stay out so reruns are byte-identical.
pub fn write_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(CSV_HEADER)?;
    let e = result.experiment;
    for r in &result.rows {
        w.write_record([
            e.as_str().to_string(),
            e.sweep_param().to_string(),
            format_number(r.sweep_value),
            r.mode.as_str().to_string(),
            e.metric_name().to_string(),
            format_number(r.metric_mean),
            format_number(r.metric_std),
            format_number(r.mean_modulus),
            r.trials_ok.to_string(),
            r.trials_failed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;

fn colour(mode: ReflectionMode) -> &'static str {
    match mode {
        ReflectionMode::Absorptive => "#c0392b",
        ReflectionMode::Conventional => "#2c6fbb",
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 * hi.abs().max(1.0) {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn chart(result: &SweepResult, label: &str, value: impl Fn(&SweepRow) -> f64) -> String {
    let (x0, x1) = range(result.rows.iter().map(|r| r.sweep_value));
    let (y0, y1) = range(result.rows.iter().map(&value));
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(s, r#"<polyline points="{left},{top} {left},{bottom} {right},{bottom}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xv:.3}</text>"#, px(xv), bottom + 18.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{yv:.3}</text>"#, left - 6.0, py(yv) + 4.0);
    }
    let e = result.experiment;
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, e.sweep_param());
    let _ = writeln!(s, r#"<text x="{:.1}" y="24" text-anchor="middle">{e}: {label}</text>"#, WIDTH / 2.0);

    let mut modes: Vec<ReflectionMode> = Vec::new();
    for r in &result.rows {
        if !modes.contains(&r.mode) {
            modes.push(r.mode);
        }
    }
    for (i, &mode) in modes.iter().enumerate() {
        let points: Vec<String> = result
            .series(mode)
            .into_iter()
            .filter(|r| value(r).is_finite())
            .map(|r| format!("{:.2},{:.2}", px(r.sweep_value), py(value(r))))
            .collect();
        let c = colour(mode);
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#, points.join(" "));
        for p in &points {
            let (x, y) = p.split_once(',').unwrap_or(("0", "0"));
            let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{c}"/>"#);
        }
        let ly = top + 16.0 * i as f64;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{ly:.1}" fill="{c}">{}</text>"#, right - 90.0, mode.as_str());
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `<stem>_<metric>.svg` and `<stem>_modulus.svg` into `dir`.
pub fn write_svg(result: &SweepResult, dir: &Path, stem: &str) -> Result<()> {
    let metric = result.experiment.metric_name();
    fs::write(dir.join(format!("{stem}_{metric}.svg")), chart(result, metric, |r| r.metric_mean))?;
    fs::write(dir.join(format!("{stem}_modulus.svg")), chart(result, "mean modulus", |r| r.mean_modulus))?;
    Ok(())
}
