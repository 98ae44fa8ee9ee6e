use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;
use crate::learn::BenchReport;
use crate::predict::{ComparisonReport, Stat};

use super::{to_json_bytes, write_atomic};

/// Rounds to six significant digits.
pub fn round_sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// Rounds every floating-point number in a JSON tree; integers are kept.
pub fn round_json(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig6(n.as_f64().unwrap_or(0.0));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn num(x: f64) -> String {
    round_sig6(x).to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file_name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(file_name: &str, header: &[&str]) -> Self {
        Self {
            file_name: file_name.to_owned(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out.into_bytes()
    }
}

/// The six-column summary plus the accuracy and timing figure tables.
pub fn bench_tables(report: &BenchReport) -> Vec<Table> {
    let mut summary = Table::new(
        "bench.csv",
        &[
            "algorithm",
            "mean_accuracy",
            "ci95_accuracy",
            "mean_train_s",
            "mean_test_s",
            "ci95_time",
        ],
    );
    let mut acc = Table::new("fig2a_accuracy.csv", &["algorithm", "mean_accuracy", "ci95_accuracy"]);
    let mut time = Table::new(
        "fig2c_time.csv",
        &["algorithm", "mean_train_s", "mean_test_s", "ci95_time"],
    );
    for r in &report.rows {
        let name = r.algorithm.to_string();
        summary.rows.push(vec![
            name.clone(),
            num(r.mean_accuracy),
            num(r.ci95_accuracy),
            num(r.mean_train_s),
            num(r.mean_test_s),
            num(r.ci95_time),
        ]);
        acc.rows
            .push(vec![name.clone(), num(r.mean_accuracy), num(r.ci95_accuracy)]);
        time.rows
            .push(vec![name, num(r.mean_train_s), num(r.mean_test_s), num(r.ci95_time)]);
    }
    vec![summary, acc, time]
}

pub fn comparison_tables(report: &ComparisonReport) -> Vec<Table> {
    let header = [
        "event",
        "baseline_mean",
        "baseline_ci95",
        "predicted_mean",
        "predicted_ci95",
    ];
    let row =
        |event: &str, b: Stat, p: Stat| vec![event.to_owned(), num(b.mean), num(b.ci95), num(p.mean), num(p.ci95)];
    let (b, p) = (&report.baseline, &report.predicted);
    let mut off = Table::new("fig3a_offloading.csv", &header);
    off.rows = vec![
        row("request", b.offloading.request, p.offloading.request),
        row("success", b.offloading.success, p.offloading.success),
        row("failure", b.offloading.failure, p.offloading.failure),
    ];
    let mut mig = Table::new("fig3b_migration.csv", &header);
    mig.rows = vec![
        row("triggered", b.migration.triggered, p.migration.triggered),
        row("success", b.migration.success, p.migration.success),
        row("failure", b.migration.failure, p.migration.failure),
        row("aborted", b.migration.aborted, p.migration.aborted),
        row("ongoing", b.migration.ongoing, p.migration.ongoing),
    ];
    vec![off, mig]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "report", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Report {
    Bench(BenchReport),
    Comparison(ComparisonReport),
}

impl Report {
    fn stem(&self) -> &'static str {
        match self {
            Report::Bench(_) => "bench_report.json",
            Report::Comparison(_) => "comparison_report.json",
        }
    }

    pub fn tables(&self) -> Vec<Table> {
        match self {
            Report::Bench(b) => bench_tables(b),
            Report::Comparison(c) => comparison_tables(c),
        }
    }
}

/// Writes the rounded JSON report and its figure tables into `dir`.
pub fn emit_report(dir: &Path, report: &Report) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let json = round_json(serde_json::to_value(report)?);
    let path = dir.join(report.stem());
    write_atomic(&path, &to_json_bytes(&json)?)?;
    written.push(path);
    for t in report.tables() {
        let path = dir.join(&t.file_name);
        write_atomic(&path, &t.to_csv())?;
        written.push(path);
    }
    Ok(written)
}
