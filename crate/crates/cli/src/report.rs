//! Report and comparison emission: JSON, CSV and aligned plain text, all in
//! the fixed nine-metric row order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lexi_morl_core::eval::{AggregateReport, Better, CompareRow};

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => String::new(),
    }
}

/// CSV schema: header `metric,value,half_width`, one row per metric in report
/// order, preceded by an `Episodes (N)` row.
pub fn report_csv(report: &AggregateReport) -> String {
    let mut out = String::from("metric,value,half_width\n");
    let _ = writeln!(out, "Episodes (N),{},", report.n_episodes);
    for row in &report.rows {
        let _ = writeln!(out, "{},{},{}", row.name, fmt_opt(row.value), fmt_opt(row.half_width));
    }
    out
}

/// Write `report.json` and a sibling `.csv` with the same stem.
pub fn write_report(report: &AggregateReport, json_path: &Path) -> Result<PathBuf> {
    let text = serde_json::to_string_pretty(report)?;
    fs::write(json_path, text)
        .with_context(|| format!("cannot write {}", json_path.display()))?;
    let csv_path = json_path.with_extension("csv");
    fs::write(&csv_path, report_csv(report))
        .with_context(|| format!("cannot write {}", csv_path.display()))?;
    Ok(csv_path)
}

pub fn load_report(path: &Path) -> Result<AggregateReport> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

/// Aligned side-by-side table; the better value per metric is starred.
pub fn comparison_text(rows: &[CompareRow], label_a: &str, label_b: &str) -> String {
    let width = rows.iter().map(|r| r.metric.len()).max().unwrap_or(10).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:width$}  {:>14}  {:>14}", "Metric", label_a, label_b);
    for r in rows {
        let mark = |side: Better| -> &'static str {
            match (r.better, side) {
                (Some(Better::A), Better::A) | (Some(Better::B), Better::B) => "*",
                _ => " ",
            }
        };
        let _ = writeln!(
            out,
            "{:width$}  {:>13}{}  {:>13}{}",
            r.metric,
            fmt_opt(r.a),
            mark(Better::A),
            fmt_opt(r.b),
            mark(Better::B),
        );
    }
    out
}

pub fn comparison_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from("metric,a,b,better\n");
    for r in rows {
        let better = match r.better {
            Some(Better::A) => "a",
            Some(Better::B) => "b",
            Some(Better::Tie) => "tie",
            None => "",
        };
        let _ = writeln!(out, "{},{},{},{}", r.metric, fmt_opt(r.a), fmt_opt(r.b), better);
    }
    out
}
