//! Static monitoring documents: the per-interval traffic table and the
//! rejection-calculator breakdown. Rendering is pure and locale-free; all
//! rounding happens here.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aggregate::IntervalRecord;
use crate::error::{Error, Result};
use crate::rejection::{QualityInput, RejectionResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Html,
    Csv,
    Json,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Html => "html",
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
        }
    }
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "html" => Ok(TableFormat::Html),
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            _ => Err(Error::validation(format!(
                "unknown format {s:?} (expected html, csv or json)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalReportRow {
    pub date_time: String,
    pub vendor: u32,
    pub billing_priority: u8,
    pub zero: u64,
    pub le5: u64,
    pub le30: u64,
    pub over30: u64,
    pub calls: u64,
    /// One decimal.
    pub total_minutes: f64,
    /// Two decimals.
    pub acd_min: Option<f64>,
    pub target_balance_pct: Option<u32>,
    pub received: u64,
    pub rejected: u64,
}

const COLUMNS: [&str; 13] = [
    "date_time",
    "vendor",
    "billing_priority",
    "zero",
    "le5",
    "le30",
    "over30",
    "calls",
    "total_minutes",
    "acd_min",
    "target_balance_pct",
    "received",
    "rejected",
];

const HTML_HEADINGS: [&str; 13] = [
    "Date and Time",
    "Vendor",
    "Billing priority",
    "=0",
    "0&lt;&nbsp;&le;5",
    "5&lt;&nbsp;&le;30",
    "&gt;30",
    "Calls",
    "Total Minutes",
    "ACD (min)",
    "Target balance",
    "Received during the current interval",
    "Rejected to balance",
];

fn round_to(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (x * f).round() / f
}

/// Integer target percentages that always add up to 100.
pub fn target_balance_pct(load: [f64; 2]) -> [u32; 2] {
    let first = (load[0] * 100.0).round().clamp(0.0, 100.0) as u32;
    [first, 100 - first]
}

/// Table rows, newest interval first, two rows per interval.
pub fn interval_rows(history: &[IntervalRecord]) -> Vec<IntervalReportRow> {
    let mut rows = Vec::with_capacity(history.len() * 2);
    for rec in history.iter().rev() {
        let targets = rec.result.load().map(target_balance_pct);
        for i in 0..2 {
            let s = &rec.stats[i];
            rows.push(IntervalReportRow {
                date_time: rec.closed_at.format_minutes(),
                vendor: s.vendor.0,
                billing_priority: rec.prefs[i],
                zero: s.bucket_zero,
                le5: s.bucket_0_5,
                le30: s.bucket_5_30,
                over30: s.bucket_over_30,
                calls: s.calls,
                total_minutes: round_to(s.total_minutes, 1),
                acd_min: s.acd_min.map(|a| round_to(a, 2)),
                target_balance_pct: targets.map(|t| t[i]),
                received: rec.counters.received[i],
                rejected: rec.counters.rejected[i],
            });
        }
    }
    rows
}

fn formatted_cells(row: &IntervalReportRow) -> [String; 13] {
    [
        row.date_time.clone(),
        row.vendor.to_string(),
        row.billing_priority.to_string(),
        row.zero.to_string(),
        row.le5.to_string(),
        row.le30.to_string(),
        row.over30.to_string(),
        row.calls.to_string(),
        format!("{:.1}", row.total_minutes),
        row.acd_min.map(|a| format!("{a:.2}")).unwrap_or_default(),
        row.target_balance_pct
            .map(|t| t.to_string())
            .unwrap_or_default(),
        row.received.to_string(),
        row.rejected.to_string(),
    ]
}

pub fn render_interval_table(history: &[IntervalRecord], format: TableFormat) -> Result<String> {
    let rows = interval_rows(history);
    match format {
        TableFormat::Csv => {
            let mut out = String::new();
            out.push_str(&COLUMNS.join(","));
            out.push('\n');
            for row in &rows {
                out.push_str(&formatted_cells(row).join(","));
                out.push('\n');
            }
            Ok(out)
        }
        TableFormat::Json => {
            let mut out = serde_json::to_string_pretty(&rows)?;
            out.push('\n');
            Ok(out)
        }
        TableFormat::Html => Ok(render_html_table(&rows)),
    }
}

fn render_html_table(rows: &[IntervalReportRow]) -> String {
    let mut out = String::new();
    out.push_str(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n\
         <title>Traffic load balance with quality routing</title>\n\
         <style>\n\
         table { border-collapse: collapse; font-family: sans-serif; font-size: 13px; }\n\
         th, td { border: 1px solid #999; padding: 2px 6px; }\n\
         td { text-align: right; }\n\
         th { background: #eee; }\n\
         </style>\n</head>\n<body>\n\
         <h2>Traffic load balance with quality routing</h2>\n<table>\n<tr>",
    );
    for h in HTML_HEADINGS {
        let _ = write!(out, "<th>{h}</th>");
    }
    out.push_str("</tr>\n");
    for row in rows {
        let mut cells = formatted_cells(row);
        if let Some(t) = row.target_balance_pct {
            cells[10] = format!("{t} %");
        }
        out.push_str("<tr>");
        for c in cells {
            let _ = write!(out, "<td>{c}</td>");
        }
        out.push_str("</tr>\n");
    }
    out.push_str("</table>\n</body>\n</html>\n");
    out
}

/// Parses a CSV interval table back into rows.
pub fn parse_interval_csv(text: &str) -> Result<Vec<IntervalReportRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn parse_interval_json(text: &str) -> Result<Vec<IntervalReportRow>> {
    Ok(serde_json::from_str(text)?)
}

/// The six-row calculator breakdown for one vendor pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CalcBreakdown {
    pub columns: [String; 2],
    pub rows: Vec<(String, [String; 2])>,
}

fn pct1(x: f64) -> String {
    format!("{:.1}%", x * 100.0)
}

pub fn render_calc_breakdown(result: &RejectionResult, input: &QualityInput) -> CalcBreakdown {
    let per = |f: &dyn Fn(usize) -> String| [f(0), f(1)];
    let na = || "n/a".to_string();
    let rows = vec![
        (
            "Minimal load for measuring (0%-50%)".to_string(),
            per(&|_| pct1(input.load_min)),
        ),
        (
            "Priority of the clone routes in billing (1-9)".to_string(),
            per(&|i| format!("Preference {}", input.pref[i])),
        ),
        (
            "ACD (in minutes)".to_string(),
            per(&|i| {
                input.acd_min[i]
                    .map(|a| format!("{} minutes", round_to(a, 2)))
                    .unwrap_or_else(na)
            }),
        ),
        (
            "Rank (0-1)".to_string(),
            per(&|i| result.balance.map(|b| pct1(b.rank[i])).unwrap_or_else(na)),
        ),
        (
            "Desired load on clone routes (%)".to_string(),
            per(&|i| result.balance.map(|b| pct1(b.load[i])).unwrap_or_else(na)),
        ),
        (
            "Rejection rate (%)".to_string(),
            per(&|i| pct1(result.reject_pct[i] / 100.0)),
        ),
    ];
    CalcBreakdown {
        columns: ["Route A".to_string(), "Route B".to_string()],
        rows,
    }
}

impl CalcBreakdown {
    pub fn to_text(&self) -> String {
        let label_w = self.rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
        let col_w = self
            .rows
            .iter()
            .flat_map(|(_, v)| v.iter().map(String::len))
            .chain(self.columns.iter().map(String::len))
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:label_w$}  {:>col_w$}  {:>col_w$}",
            "", self.columns[0], self.columns[1]
        );
        for (label, v) in &self.rows {
            let _ = writeln!(out, "{label:label_w$}  {:>col_w$}  {:>col_w$}", v[0], v[1]);
        }
        out
    }

    pub fn to_html(&self) -> String {
        let mut out = String::from(
            "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n\
             <title>Rejection calculator</title>\n</head>\n<body>\n<table border=\"1\">\n",
        );
        let _ = writeln!(
            out,
            "<tr><th></th><th>{}</th><th>{}</th></tr>",
            self.columns[0], self.columns[1]
        );
        for (label, v) in &self.rows {
            let _ = writeln!(
                out,
                "<tr><td>{label}</td><td>{}</td><td>{}</td></tr>",
                v[0], v[1]
            );
        }
        out.push_str("</table>\n</body>\n</html>\n");
        out
    }

    pub fn value(&self, label_prefix: &str) -> Option<&[String; 2]> {
        self.rows
            .iter()
            .find(|(l, _)| l.starts_with(label_prefix))
            .map(|(_, v)| v)
    }
}
