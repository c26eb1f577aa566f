//! Convergence reports: per-hbar rows, verdicts, and their CSV and JSON forms.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 6] = ["experiment", "hbar", "value", "reference", "defect", "wall_ms"];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub hbar: f64,
    /// What the row measures, e.g. the symbol pair.
    pub label: String,
    pub value: Option<f64>,
    pub reference: Option<f64>,
    /// |value - reference| when both are present.
    pub defect: Option<f64>,
    pub wall_ms: Option<f64>,
    /// Why the row has no value, when it failed.
    pub error: Option<String>,
    pub details: BTreeMap<String, f64>,
}

impl Row {
    pub fn new(hbar: f64, label: impl Into<String>, value: f64, reference: Option<f64>) -> Self {
        Row {
            hbar,
            label: label.into(),
            value: Some(value),
            reference,
            defect: reference.map(|r| (value - r).abs()),
            ..Row::default()
        }
    }

    pub fn failed(hbar: f64, label: impl Into<String>, error: &Error) -> Self {
        Row { hbar, label: label.into(), error: Some(error.to_string()), ..Row::default() }
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.get(key).copied()
    }

    /// defect / |reference|, when defined.
    pub fn relative_error(&self) -> Option<f64> {
        let (d, r) = (self.defect?, self.reference?);
        Some(if r != 0.0 { d / r.abs() } else { d })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Verdict {
    /// Passes when measured <= threshold.
    pub fn at_most(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Verdict { name: name.into(), passed: measured <= threshold, measured, threshold, detail: detail.into() }
    }

    /// Passes when measured >= threshold.
    pub fn at_least(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Verdict { name: name.into(), passed: measured >= threshold, measured, threshold, detail: detail.into() }
    }

    pub fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        let m = if passed { 1.0 } else { 0.0 };
        Verdict { name: name.into(), passed, measured: m, threshold: 1.0, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub rows: Vec<Row>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    /// Structured extras, e.g. full singular-value comparisons.
    pub attachments: BTreeMap<String, serde_json::Value>,
}

impl ConvergenceReport {
    pub fn new(config: &ExperimentConfig) -> Self {
        ConvergenceReport {
            experiment: config.experiment.clone(),
            config: config.clone(),
            rows: Vec::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
            attachments: BTreeMap::new(),
        }
    }

    /// True when every verdict passed and no row failed.
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed) && self.failed_rows() == 0
    }

    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    /// Rows ordered by decreasing hbar; ties keep their order.
    pub fn sort_rows(&mut self) {
        self.rows.sort_by(|a, b| b.hbar.total_cmp(&a.hbar));
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::io("<csv>", std::io::Error::other(e));
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        let num = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
        for r in &self.rows {
            w.write_record([
                self.experiment.clone(),
                format!("{:e}", r.hbar),
                num(r.value),
                num(r.reference),
                num(r.defect),
                num(r.wall_ms),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Write `<experiment>.csv` and the `<experiment>.json` sidecar (config echo,
/// rows with details, verdicts) into `dir`, creating it if needed.
pub fn emit_report(report: &ConvergenceReport, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = if report.experiment.is_empty() { "report" } else { report.experiment.as_str() };
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    std::fs::write(&csv_path, report.csv_string()).map_err(|e| Error::io(&csv_path, e))?;
    std::fs::write(&json_path, report.json_string()).map_err(|e| Error::io(&json_path, e))?;
    Ok((csv_path, json_path))
}

/// Rows used for trend verdicts: the last max(3, halvings - 2) of them.
pub fn trend_window<T>(rows: &[T], halvings: usize) -> &[T] {
    let k = 3.max(halvings.saturating_sub(2)).min(rows.len());
    &rows[rows.len() - k..]
}

/// True when each value is at most the previous one times (1 + slack).
pub fn nonincreasing(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack) + f64::MIN_POSITIVE)
}
