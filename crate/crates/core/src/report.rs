//! Run summaries and their serialized forms (JSON, CSV, trace CSV).

use std::fmt::Write as _;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{SimState, TraceEvent};

/// Aggregated outcome of one run. Field order is the serialized column
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    /// Ticks actually executed (may undershoot the budget on early stop).
    pub ticks_elapsed: u64,
    pub number_of_submissions: u64,
    pub number_of_submissions_completed: u64,
    pub accepted_submissions: u64,
    pub tasks_completed: u64,
    pub total_cost: f64,
    pub mean_task_completion: f64,
}

const CSV_COLUMNS: [&str; 8] = [
    "seed",
    "ticks_elapsed",
    "number_of_submissions",
    "number_of_submissions_completed",
    "accepted_submissions",
    "tasks_completed",
    "total_cost",
    "mean_task_completion",
];

/// Summarize a finished run state.
pub fn tally(state: &SimState) -> Report {
    let pool = &state.it.task_pool;
    let mean_task_completion = if pool.is_empty() {
        0.0
    } else {
        pool.iter().map(|t| t.completion).sum::<f64>() / pool.len() as f64
    };
    Report {
        seed: state.seed,
        ticks_elapsed: state.tick - 1,
        number_of_submissions: state.kb.total_submissions,
        number_of_submissions_completed: state.kb.completed_submissions,
        accepted_submissions: state.kb.accepted_submissions,
        tasks_completed: state.kb.tasks_completed,
        total_cost: state.kb.total_cost,
        mean_task_completion,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown format {0:?} (expected \"json\" or \"csv\")")]
pub struct UnknownFormat(pub String);

impl FromStr for ReportFormat {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(UnknownFormat(other.to_string())),
        }
    }
}

/// Format a real number with up to six significant digits, trailing zeros
/// trimmed (`5.0` renders as `5`, `0.123456789` as `0.123457`).
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).clamp(0, 17) as usize;
    let text = format!("{x:.decimals$}");
    if text.contains('.') {
        text.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        text
    }
}

fn csv_row(report: &Report) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        report.seed,
        report.ticks_elapsed,
        report.number_of_submissions,
        report.number_of_submissions_completed,
        report.accepted_submissions,
        report.tasks_completed,
        fmt_real(report.total_cost),
        fmt_real(report.mean_task_completion),
    )
}

pub fn csv_header() -> String {
    CSV_COLUMNS.join(",")
}

/// Render one report: pretty JSON, or a two-line CSV (header plus row).
/// Both end with a newline.
pub fn emit_report(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut text =
                serde_json::to_string_pretty(report).expect("report serializes to JSON");
            text.push('\n');
            text
        }
        ReportFormat::Csv => format!("{}\n{}\n", csv_header(), csv_row(report)),
    }
}

/// Render a sweep: a JSON array of report objects, or one CSV with a row
/// per report in input order.
pub fn emit_reports(reports: &[Report], format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut text =
                serde_json::to_string_pretty(reports).expect("reports serialize to JSON");
            text.push('\n');
            text
        }
        ReportFormat::Csv => {
            let mut text = csv_header();
            text.push('\n');
            for report in reports {
                let _ = writeln!(text, "{}", csv_row(report));
            }
            text
        }
    }
}

/// Write the event log as CSV: header
/// `tick,kind,agent_id,task_signifier,completion_level`, one row per event
/// in emission order, inapplicable fields left empty. Completion levels are
/// written with full round-trip precision.
pub fn emit_trace(events: &[TraceEvent], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "tick,kind,agent_id,task_signifier,completion_level")?;
    for event in events {
        write!(out, "{},{},", event.tick, event.kind.as_str())?;
        match event.agent_id {
            Some(id) => write!(out, "{id},")?,
            None => write!(out, ",")?,
        }
        match event.task_signifier {
            Some(signifier) => write!(out, "{signifier},")?,
            None => write!(out, ",")?,
        }
        match event.completion_level {
            Some(level) => writeln!(out, "{level}")?,
            None => writeln!(out)?,
        }
    }
    Ok(())
}
