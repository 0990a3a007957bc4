//! Battery reports and their two text formats.
//!
//! The machine format is JSON lines, UTF-8 with LF endings. Each report is a
//! header record followed by one record per check, fields in this order:
//!
//! ```text
//! {"record":"header","name":..,"kind":..,"spec_hash":..,"seed":..,"version":..,"checks":..}
//! {"record":"check","name":..,"status":"pass|fail|skipped","residual":<number|null>,
//!  "tolerance":..,"detail":..,"paper_anchor":..,"runtime_ms":..}
//! ```
//!
//! `residual` is `null` when the check produced no finite number. Several
//! reports may be concatenated; each starts with its own header.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub status: Status,
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub detail: String,
    pub paper_anchor: String,
    pub runtime_ms: f64,
}

impl Row {
    /// Pass exactly when a finite residual is within tolerance.
    pub fn evaluated(name: &str, residual: f64, tolerance: f64, detail: String, anchor: &str) -> Self {
        let residual = residual.is_finite().then_some(residual);
        let status = match residual {
            Some(r) if r <= tolerance => Status::Pass,
            _ => Status::Fail,
        };
        Self { name: name.into(), status, residual, tolerance, detail, paper_anchor: anchor.into(), runtime_ms: 0.0 }
    }

    pub fn skipped(name: &str, tolerance: f64, detail: String, anchor: &str) -> Self {
        Self {
            name: name.into(),
            status: Status::Skipped,
            residual: None,
            tolerance,
            detail,
            paper_anchor: anchor.into(),
            runtime_ms: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub name: String,
    pub kind: String,
    pub spec_hash: String,
    pub seed: u64,
    pub version: String,
    pub checks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub header: Header,
    pub rows: Vec<Row>,
}

impl Report {
    /// True when every non-skipped row passes.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.status == Status::Fail)
    }

    /// Sets every `runtime_ms` to zero, leaving a fully deterministic report.
    pub fn without_timing(mut self) -> Self {
        for row in &mut self.rows {
            row.runtime_ms = 0.0;
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Human,
    Machine,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Record {
    Header(Header),
    Check(Row),
}

pub fn emit_report(report: &Report, format: Format) -> String {
    match format {
        Format::Machine => emit_machine(report),
        Format::Human => emit_human(report),
    }
}

fn emit_machine(report: &Report) -> String {
    let mut out = String::new();
    let line = |out: &mut String, rec: &Record| {
        out.push_str(&serde_json::to_string(rec).expect("records serialize"));
        out.push('\n');
    };
    line(&mut out, &Record::Header(report.header.clone()));
    for row in &report.rows {
        line(&mut out, &Record::Check(row.clone()));
    }
    out
}

fn fmt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"))
}

fn emit_human(report: &Report) -> String {
    let h = &report.header;
    let mut out = String::new();
    let _ = writeln!(out, "{} ({}) seed {} spec {}", h.name, h.kind, h.seed, &h.spec_hash[..h.spec_hash.len().min(12)]);
    let cells: Vec<[String; 6]> = report
        .rows
        .iter()
        .map(|r| {
            let mark = if r.status == Status::Fail { "!" } else { " " };
            [
                format!("{mark} {}", r.name),
                r.status.as_str().to_uppercase(),
                fmt_num(r.residual),
                fmt_num(Some(r.tolerance)),
                r.paper_anchor.clone(),
                r.detail.clone(),
            ]
        })
        .collect();
    let titles = ["  check", "status", "residual", "tolerance", "anchor", "detail"];
    let mut widths = titles.map(|t| t.chars().count());
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let push_row = |out: &mut String, row: &[String]| {
        let last = row.len() - 1;
        for (i, c) in row.iter().enumerate() {
            if i == last {
                out.push_str(c);
            } else {
                let pad = widths[i] - c.chars().count();
                out.push_str(c);
                out.push_str(&" ".repeat(pad + 2));
            }
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
    };
    push_row(&mut out, &titles.map(String::from));
    for row in &cells {
        push_row(&mut out, row);
    }
    let failed = report.failures().count();
    let _ = writeln!(out, "{} checks, {} failed", report.rows.len(), failed);
    out
}

/// Parses concatenated machine-format reports.
pub fn parse_machine(text: &str) -> Result<Vec<Report>, CliError> {
    let mut reports: Vec<Report> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(line)
            .map_err(|e| CliError::Report(format!("line {}: {e}", i + 1)))?;
        match rec {
            Record::Header(header) => reports.push(Report { header, rows: Vec::new() }),
            Record::Check(row) => reports
                .last_mut()
                .ok_or_else(|| CliError::Report(format!("line {}: check record before any header", i + 1)))?
                .rows
                .push(row),
        }
    }
    Ok(reports)
}
