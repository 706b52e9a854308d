//! Trace and report files.
//!
//! A trace is comma-separated text:
//!
//! ```text
//! # compgn-trace problem=rosenbrock-ls mu0=1 ... timestamp=1760000000
//! k,objective,mu_k,step_norm,backtracks,inner_iterations,criticality,cumulative_step
//! 0,2.4200000000000003e1,...
//! # status=converged-critical iterations=... final_objective=... final_x=...
//! ```
//!
//! Reals are written with 17 significant digits so they parse back to the
//! same `f64`. The metadata line carries the only nondeterministic field,
//! `timestamp`, which can be left out.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use compgn_core::diagnostics::CheckReport;
use compgn_core::RunOutcome;

pub const TRACE_COLUMNS: [&str; 8] = [
    "k",
    "objective",
    "mu_k",
    "step_norm",
    "backtracks",
    "inner_iterations",
    "criticality",
    "cumulative_step",
];

pub const REPORT_COLUMNS: [&str; 6] = ["check", "max_violation", "tolerance", "samples", "skipped", "pass"];

/// `f64` with 17 significant digits.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn vector(v: &[f64]) -> String {
    v.iter().map(|x| real(*x)).collect::<Vec<_>>().join(";")
}

fn meta_line(tag: &str, meta: &[(String, String)]) -> String {
    let mut line = format!("# {tag}");
    for (k, v) in meta {
        let _ = write!(line, " {k}={v}");
    }
    line
}

/// Renders a full trace. `meta` goes on the leading comment line in order.
pub fn render_trace(meta: &[(String, String)], outcome: &RunOutcome) -> String {
    let mut out = meta_line("compgn-trace", meta);
    out.push('\n');
    out.push_str(&TRACE_COLUMNS.join(","));
    out.push('\n');
    for r in &outcome.trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.k,
            real(r.objective),
            real(r.mu_k),
            real(r.step_norm),
            r.backtracks,
            r.inner_iterations,
            real(r.criticality),
            real(r.cumulative_step)
        );
    }
    let mut summary = vec![
        ("status".to_string(), outcome.status.to_string()),
        ("iterations".to_string(), outcome.trace.len().to_string()),
        ("final_objective".to_string(), real(outcome.final_objective)),
        ("final_x".to_string(), vector(&outcome.final_x)),
    ];
    if let Some(c) = outcome.final_criticality {
        summary.push(("final_criticality".to_string(), real(c)));
    }
    out.push_str(&meta_line("summary", &summary));
    out.push('\n');
    out
}

/// One parsed data row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub objective: f64,
    pub mu_k: f64,
    pub step_norm: f64,
    pub backtracks: usize,
    pub inner_iterations: usize,
    pub criticality: f64,
    pub cumulative_step: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedTrace {
    pub meta: BTreeMap<String, String>,
    pub rows: Vec<TraceRow>,
    pub summary: BTreeMap<String, String>,
}

fn parse_meta(line: &str, tag: &str) -> Option<BTreeMap<String, String>> {
    let rest = line.strip_prefix("# ")?.strip_prefix(tag)?;
    Some(
        rest.split_whitespace()
            .filter_map(|kv| kv.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
    )
}

pub fn parse_trace(text: &str) -> Result<ParsedTrace> {
    let mut parsed = ParsedTrace::default();
    let mut header_seen = false;
    for (lineno, line) in text.lines().enumerate() {
        let ctx = || format!("trace line {}", lineno + 1);
        if line.starts_with('#') {
            if let Some(m) = parse_meta(line, "compgn-trace") {
                parsed.meta = m;
            } else if let Some(m) = parse_meta(line, "summary") {
                parsed.summary = m;
            }
            continue;
        }
        if !header_seen {
            if line != TRACE_COLUMNS.join(",") {
                bail!("{}: expected header row, found {line:?}", ctx());
            }
            header_seen = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != TRACE_COLUMNS.len() {
            bail!("{}: expected {} fields, found {}", ctx(), TRACE_COLUMNS.len(), f.len());
        }
        let real = |i: usize| f[i].parse::<f64>().with_context(ctx);
        let count = |i: usize| f[i].parse::<usize>().with_context(ctx);
        parsed.rows.push(TraceRow {
            k: count(0)?,
            objective: real(1)?,
            mu_k: real(2)?,
            step_norm: real(3)?,
            backtracks: count(4)?,
            inner_iterations: count(5)?,
            criticality: real(6)?,
            cumulative_step: real(7)?,
        });
    }
    if !header_seen {
        return Err(anyhow!("trace has no header row"));
    }
    Ok(parsed)
}

/// Renders check reports with an overall verdict line.
pub fn render_reports(meta: &[(String, String)], reports: &[CheckReport]) -> String {
    let mut out = meta_line("compgn-check", meta);
    out.push('\n');
    out.push_str(&REPORT_COLUMNS.join(","));
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.name,
            real(r.max_violation),
            real(r.tolerance),
            r.samples,
            r.skipped,
            r.pass
        );
    }
    let overall = if reports.iter().all(|r| r.pass) { "pass" } else { "fail" };
    let _ = writeln!(out, "# overall={overall}");
    out
}

pub fn parse_reports(text: &str) -> Result<Vec<CheckReport>> {
    let mut reports = Vec::new();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    match lines.next() {
        Some(h) if h == REPORT_COLUMNS.join(",") => {}
        _ => bail!("report has no header row"),
    }
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != REPORT_COLUMNS.len() {
            bail!("malformed report row {line:?}");
        }
        let r = CheckReport {
            name: f[0].to_string(),
            max_violation: f[1].parse()?,
            tolerance: f[2].parse()?,
            samples: f[3].parse()?,
            skipped: f[4].parse()?,
            pass: f[5].parse()?,
        };
        reports.push(r);
    }
    Ok(reports)
}
