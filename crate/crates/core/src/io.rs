//! Plain-text formats: CSV tables with `#` metadata lines and `key = value`
//! reports. Floats are written in shortest round-trip form so that output is
//! byte-stable and re-reading is lossless.

use std::fmt::Write as _;
use std::path::Path;

use crate::lockin_dsp::{NoiseSpectrum, TimeSeries};
use crate::scan_engine::{ScanTrace, TraceMetadata};
use crate::spin_model::LevelSet;
use crate::{Error, Result};

pub const TRACE_HEADER: [&str; 2] = ["B_T", "signal"];

fn metadata_lines(out: &mut String, pairs: &[(&str, String)]) {
    for (k, v) in pairs {
        let _ = writeln!(out, "# {k} = {v}");
    }
}

pub fn trace_to_csv(trace: &ScanTrace) -> Result<String> {
    trace.validate()?;
    let mut out = String::new();
    let mut meta = vec![("sample", trace.metadata.sample.clone())];
    if let Some(p) = trace.metadata.normalization_point {
        meta.push(("normalization_point_T", p.to_string()));
    }
    metadata_lines(&mut out, &meta);
    if let Some(cfg) = &trace.metadata.config {
        let text = toml::to_string(cfg).map_err(|e| Error::Parse(e.to_string()))?;
        for line in text.lines() {
            let _ = writeln!(out, "# scan.{line}");
        }
    }
    let _ = writeln!(out, "{}", TRACE_HEADER.join(","));
    for (b, s) in trace.field.iter().zip(&trace.signal) {
        let _ = writeln!(out, "{b},{s}");
    }
    Ok(out)
}

/// Splits `#` lines from the table body.
fn split_comments(text: &str) -> (Vec<(String, String)>, String) {
    let mut meta = Vec::new();
    let mut body = String::new();
    for line in text.lines() {
        if let Some(rest) = line.trim_start().strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
        } else if !line.trim().is_empty() {
            body.push_str(line);
            body.push('\n');
        }
    }
    (meta, body)
}

fn parse_table(body: &str, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(body.as_bytes());
    let found: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if found != header {
        return Err(Error::Parse(format!(
            "expected columns {}, found {}",
            header.join(","),
            found.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: '{f}': {e}", i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn trace_from_csv(text: &str) -> Result<ScanTrace> {
    let (meta, body) = split_comments(text);
    let rows = parse_table(&body, &TRACE_HEADER)?;
    let (field, signal) = rows.into_iter().map(|r| (r[0], r[1])).unzip();
    let mut trace = ScanTrace::new(field, signal).map_err(|e| Error::Parse(e.to_string()))?;
    let lookup = |key: &str| meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
    trace.metadata = TraceMetadata {
        sample: lookup("sample").unwrap_or_default(),
        config: None,
        normalization_point: lookup("normalization_point_T").and_then(|v| v.parse().ok()),
    };
    Ok(trace)
}

pub fn read_trace(path: &Path) -> Result<ScanTrace> {
    trace_from_csv(&std::fs::read_to_string(path)?)
}

pub fn levels_to_csv(sets: &[LevelSet]) -> String {
    let mut out = String::new();
    let n = sets.first().map(|s| s.energies.len()).unwrap_or(0);
    let mut header = vec!["B_T".to_string()];
    header.extend((1..=n).map(|k| format!("E{k}_Hz")));
    let _ = writeln!(out, "{}", header.join(","));
    for set in sets {
        let mut row = vec![set.field.magnitude().to_string()];
        row.extend(set.energies.iter().map(|e| e.to_string()));
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn time_series_to_csv(ts: &TimeSeries, units: &str, calibration_slope: Option<f64>) -> String {
    let mut out = String::new();
    let mut meta = vec![
        ("sample_rate_Hz", ts.sample_rate.to_string()),
        ("units", units.to_string()),
    ];
    if let Some(k) = calibration_slope {
        meta.push(("calibration_slope_per_T", k.to_string()));
    }
    metadata_lines(&mut out, &meta);
    let _ = writeln!(out, "t_s,value");
    for (i, v) in ts.values.iter().enumerate() {
        let _ = writeln!(out, "{},{v}", ts.time(i));
    }
    out
}

pub fn time_series_from_csv(text: &str) -> Result<TimeSeries> {
    let (meta, body) = split_comments(text);
    let rows = parse_table(&body, &["t_s", "value"])?;
    let rate = meta
        .iter()
        .find(|(k, _)| k == "sample_rate_Hz")
        .and_then(|(_, v)| v.parse::<f64>().ok())
        .ok_or_else(|| Error::Parse("missing sample_rate_Hz metadata".into()))?;
    let t0 = rows.first().map(|r| r[0]).unwrap_or(0.0);
    TimeSeries::new(rate, rows.into_iter().map(|r| r[1]).collect(), t0)
}

pub fn spectrum_to_csv(spec: &NoiseSpectrum) -> String {
    let mut out = String::new();
    metadata_lines(
        &mut out,
        &[
            ("window", spec.window.clone()),
            ("n_averages", spec.n_averages.to_string()),
        ],
    );
    let _ = writeln!(out, "f_Hz,asd_T_per_sqrtHz");
    for (f, a) in spec.frequencies.iter().zip(&spec.asd) {
        let _ = writeln!(out, "{f},{a}");
    }
    out
}

/// `key = value` lines in the given order.
pub fn report<K: AsRef<str>, V: AsRef<str>>(pairs: impl IntoIterator<Item = (K, V)>) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "{} = {}", k.as_ref(), v.as_ref());
    }
    out
}

/// Inverse of [`report`]; ignores blank and `#` lines.
pub fn parse_report(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Parse(format!("expected 'key = value', got '{l}'")))
        })
        .collect()
}
