//! CSV emission with a pinned schema.
//!
//! Raw rows carry one line per (sweep value, method, seed) episode; the
//! aggregate file carries the per-(sweep value, method) means with 95%
//! half-widths. Floats are rendered with up to 9 significant digits,
//! `.` decimal separator, trailing zeros trimmed; the undefined average
//! distortion of an episode with no accessed available slot is `NaN`.

use std::io;
use std::path::Path;

/// Exact raw-CSV header.
pub const RAW_HEADER: &str = "experiment,sweep_param,sweep_value,method,seed,avg_distortion,spectrum_utilization,collision_rate,accessed_slots,available_slots";

pub const AGGREGATE_HEADER: &str = "experiment,sweep_param,sweep_value,method,seeds,avg_distortion_mean,avg_distortion_ci,spectrum_utilization_mean,spectrum_utilization_ci,collision_rate_mean,collision_rate_ci";

/// One episode's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub sweep_param: String,
    pub sweep_value: f64,
    pub method: &'static str,
    pub seed: u64,
    pub avg_distortion: f64,
    pub spectrum_utilization: f64,
    pub collision_rate: f64,
    pub accessed_slots: u64,
    pub available_slots: u64,
}

/// Per-(sweep value, method) aggregate over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub experiment: String,
    pub sweep_param: String,
    pub sweep_value: f64,
    pub method: &'static str,
    pub seeds: usize,
    pub avg_distortion: (f64, f64),
    pub spectrum_utilization: (f64, f64),
    pub collision_rate: (f64, f64),
}

/// Render a float with at most 9 significant digits.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i64;
    let decimals = (8 - mag).clamp(0, 24) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

pub fn render_raw(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(RAW_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.experiment,
            r.sweep_param,
            fmt_float(r.sweep_value),
            r.method,
            r.seed,
            fmt_float(r.avg_distortion),
            fmt_float(r.spectrum_utilization),
            fmt_float(r.collision_rate),
            r.accessed_slots,
            r.available_slots,
        ));
    }
    out
}

pub fn render_aggregates(rows: &[AggregateRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(AGGREGATE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.experiment,
            r.sweep_param,
            fmt_float(r.sweep_value),
            r.method,
            r.seeds,
            fmt_float(r.avg_distortion.0),
            fmt_float(r.avg_distortion.1),
            fmt_float(r.spectrum_utilization.0),
            fmt_float(r.spectrum_utilization.1),
            fmt_float(r.collision_rate.0),
            fmt_float(r.collision_rate.1),
        ));
    }
    out
}

pub fn write_raw(path: impl AsRef<Path>, rows: &[ResultRow]) -> io::Result<()> {
    std::fs::write(path, render_raw(rows))
}

pub fn write_aggregates(path: impl AsRef<Path>, rows: &[AggregateRow]) -> io::Result<()> {
    std::fs::write(path, render_aggregates(rows))
}
