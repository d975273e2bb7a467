// SPDX-License-Identifier: MIT OR Apache-2.0

//! File formats: observation sequences, signal specs, detection results,
//! penalty scan traces and experiment tables.
//!
//! Floats are written with Rust's shortest round-trip formatting, so the same
//! values always produce the same bytes.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use combss_core::{DetectionResult, ScanTrace, SignalSpec};
use serde::Serialize;

use crate::harness::{ExperimentRecord, SummaryRow};
use crate::{CliError, Result};

/// Parses one value per line, with an optional `y` header. Blank lines are
/// ignored.
pub fn parse_series(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let field = line.trim();
        if field.is_empty() || (lineno == 0 && field.eq_ignore_ascii_case("y")) {
            continue;
        }
        let v: f64 = field.parse().map_err(|_| {
            CliError::Validation(format!("line {}: not a number: {field:?}", lineno + 1))
        })?;
        if !v.is_finite() {
            return Err(CliError::Validation(format!(
                "line {}: value is not finite",
                lineno + 1
            )));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(CliError::Validation(
            "input contains no observations".into(),
        ));
    }
    Ok(values)
}

pub fn read_series(path: &Path) -> Result<Vec<f64>> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| CliError::io(path, e))?;
    parse_series(&text).map_err(|e| match e {
        CliError::Validation(msg) => CliError::Validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_series(out: &mut dyn Write, y: &[f64]) -> std::io::Result<()> {
    writeln!(out, "y")?;
    for v in y {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

pub fn read_spec(path: &Path) -> Result<SignalSpec> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let spec: SignalSpec =
        serde_json::from_reader(std::io::BufReader::new(file)).map_err(|source| {
            CliError::Json {
                path: path.into(),
                source,
            }
        })?;
    spec.validate()?;
    Ok(spec)
}

pub fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}

pub fn write_detection(out: &mut dyn Write, result: &DetectionResult) -> std::io::Result<()> {
    write_json(out, result)
}

fn join_tau(tau: &[usize]) -> String {
    tau.iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

fn csv_error(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        path: path.into(),
        source,
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

/// `lambda,k_hat,standardized_rss`, one row per scanned penalty.
pub fn write_scan_trace(path: &Path, trace: &ScanTrace) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["lambda", "k_hat", "standardized_rss"])
        .map_err(csv_error(path))?;
    for e in &trace.entries {
        w.write_record([
            e.lambda.to_string(),
            e.k_hat.to_string(),
            e.standardized_rss.to_string(),
        ])
        .map_err(csv_error(path))?;
    }
    finish(w, path)
}

/// `lambda,k_hat` for the probes of an interval-halving search.
pub fn write_bisection_trace(path: &Path, trace: &[(f64, usize)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["lambda", "k_hat"])
        .map_err(csv_error(path))?;
    for (lambda, k) in trace {
        w.write_record([lambda.to_string(), k.to_string()])
            .map_err(csv_error(path))?;
    }
    finish(w, path)
}

pub const RECORD_HEADER: [&str; 11] = [
    "scale",
    "replication",
    "rule",
    "lambda",
    "k_hat",
    "tau_hat",
    "f1",
    "hausdorff",
    "hausdorff_std",
    "skipped",
    "wall_time_ms",
];

pub fn write_records(path: &Path, records: &[ExperimentRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(RECORD_HEADER).map_err(csv_error(path))?;
    for r in records {
        w.write_record([
            r.scale_value.to_string(),
            r.replication.to_string(),
            r.rule.as_str().to_string(),
            r.lambda.to_string(),
            r.k_hat.to_string(),
            join_tau(&r.tau_hat),
            r.f1.to_string(),
            r.hausdorff.to_string(),
            r.hausdorff_std.to_string(),
            r.skipped.to_string(),
            r.wall_time_ms.to_string(),
        ])
        .map_err(csv_error(path))?;
    }
    finish(w, path)
}

pub const SUMMARY_HEADER: [&str; 8] = [
    "scale",
    "rule",
    "mean_f1",
    "mean_hausdorff",
    "mean_hausdorff_std",
    "mean_k_hat",
    "n_skipped",
    "n_inf_hausdorff",
];

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(SUMMARY_HEADER).map_err(csv_error(path))?;
    for r in rows {
        w.write_record([
            r.scale_value.to_string(),
            r.rule.as_str().to_string(),
            r.mean_f1.to_string(),
            r.mean_hausdorff.to_string(),
            r.mean_hausdorff_std.to_string(),
            r.mean_k_hat.to_string(),
            r.n_skipped.to_string(),
            r.n_inf_hausdorff.to_string(),
        ])
        .map_err(csv_error(path))?;
    }
    finish(w, path)
}

pub fn write_histogram(path: &Path, counts: &[(usize, usize)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["index", "count"])
        .map_err(csv_error(path))?;
    for (index, count) in counts {
        w.write_record([index.to_string(), count.to_string()])
            .map_err(csv_error(path))?;
    }
    finish(w, path)
}
