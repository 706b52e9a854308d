//! The `list`, `solve` and `check` verbs.
//!
//! Exit codes: 0 success (converged run, or every check passed), 1 usage or
//! I/O error, 2 diverging iterates, 3 a budget ran out (outer, backtracking
//! or inner), 4 at least one check failed.

use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use compgn_core::diagnostics::{self, CheckReport};
use compgn_core::{run, CompositeProblem, RunStatus, SolverConfig};

use crate::registry::{self, Params, RegistryEntry};
use crate::spec::RunSpec;
use crate::trace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

pub fn exit_code(status: RunStatus) -> i32 {
    match status {
        RunStatus::ConvergedCritical => EXIT_OK,
        RunStatus::DivergingNorm => EXIT_DIVERGED,
        RunStatus::OuterBudgetExhausted | RunStatus::BacktrackBudgetExhausted | RunStatus::InnerFailure => EXIT_BUDGET,
    }
}

pub fn list_problems(out: &mut dyn Write) -> Result<()> {
    for e in registry::registry() {
        writeln!(out, "{}\t{}", e.name, e.notes)?;
    }
    Ok(())
}

fn unix_time() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn write_output(path: Option<&PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => stdout.write_all(text.as_bytes()).context("cannot write to stdout"),
    }
}

pub fn solve_command(spec: &RunSpec, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match solve_inner(spec, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn solve_inner(spec: &RunSpec, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let resolved = spec.resolve()?;
    let outcome = run(&resolved.problem, &resolved.x0, &resolved.config)?;
    let c = &resolved.config;
    let mut meta = vec![
        ("problem".to_string(), resolved.entry.name.to_string()),
        ("mu0".to_string(), trace::real(c.mu0)),
        ("tau".to_string(), trace::real(c.tau)),
        ("step_tolerance".to_string(), trace::real(c.step_tolerance)),
        ("max_outer_iterations".to_string(), c.max_outer_iterations.to_string()),
        ("reset_mu".to_string(), c.reset_mu_each_iteration.to_string()),
        ("seed".to_string(), resolved.seed.to_string()),
        ("projected_start".to_string(), outcome.projected_start.to_string()),
    ];
    for (k, v) in &spec.params {
        meta.push((format!("param.{k}"), trace::real(*v)));
    }
    if resolved.timestamp {
        meta.push(("timestamp".to_string(), unix_time().to_string()));
    }
    let text = trace::render_trace(&meta, &outcome);
    write_output(resolved.trace.as_ref(), &text, stdout)?;
    if let Some(e) = &outcome.error {
        let _ = writeln!(stderr, "{}: {e}", outcome.status);
    }
    let _ = writeln!(
        stderr,
        "{}: {} after {} iterations, objective {}",
        resolved.entry.name,
        outcome.status,
        outcome.trace.len(),
        trace::real(outcome.final_objective)
    );
    Ok(exit_code(outcome.status))
}

/// Options of the `check` verb.
#[derive(Debug, Clone, Default)]
pub struct CheckSpec {
    pub problem: String,
    pub params: Params,
    pub seed: u64,
    pub samples: usize,
    pub report: Option<PathBuf>,
    /// Scale the Jacobian oracle by `1 + fraction` (negative control).
    pub corrupt_jacobian: Option<f64>,
}

pub fn check_command(spec: &CheckSpec, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match check_inner(spec, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn check_inner(spec: &CheckSpec, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let entry = registry::find(&spec.problem)
        .ok_or_else(|| anyhow::anyhow!("unknown problem {:?}; see `compgn list`", spec.problem))?;
    let problem = match spec.corrupt_jacobian {
        Some(f) => registry::build_with_corrupted_jacobian(&entry, &spec.params, f)?,
        None => entry.build(&spec.params)?,
    };
    let reports = check_suite(&problem, &entry, spec.seed, spec.samples);
    let mut meta = vec![
        ("problem".to_string(), entry.name.to_string()),
        ("seed".to_string(), spec.seed.to_string()),
        ("samples".to_string(), spec.samples.to_string()),
    ];
    if let Some(f) = spec.corrupt_jacobian {
        meta.push(("corrupt_jacobian".to_string(), trace::real(f)));
    }
    let text = trace::render_reports(&meta, &reports);
    write_output(spec.report.as_ref(), &text, stdout)?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        let _ = writeln!(stderr, "{}: all {} checks passed", entry.name, reports.len());
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(stderr, "{}: failed checks: {}", entry.name, failed.join(", "));
        Ok(EXIT_CHECK_FAILED)
    }
}

/// Fraction of evaluated points allowed to fail a sampled derivative check
/// (finite differences can straddle a kink that the probe missed).
pub const ALLOWED_FAILURE_FRACTION: f64 = 0.05;

const PROBE_MUS: [f64; 3] = [0.1, 1.0, 10.0];
const SHORT_RUN_ITERATIONS: usize = 50;
/// Slack for the descent chain along the short run.
pub const DESCENT_CHAIN_SLACK: f64 = 1e-7;

fn errored(name: &str) -> CheckReport {
    CheckReport::new(format!("{name}-error"), f64::INFINITY, 0.0, 0, 0)
}

/// Sample points from the entry's diagnostic box, projected onto `D`.
pub fn sample_points(problem: &CompositeProblem, entry: &RegistryEntry, count: usize, seed: u64) -> Vec<Vec<f64>> {
    diagnostics::sample_box(&entry.sample_lower, &entry.sample_upper, count, seed)
        .into_iter()
        .map(|x| problem.set().project(&x))
        .collect()
}

/// The full diagnostic suite of the `check` verb.
pub fn check_suite(problem: &CompositeProblem, entry: &RegistryEntry, seed: u64, samples: usize) -> Vec<CheckReport> {
    let config = entry.default_config();
    let inner = config.inner;
    let slack = config.slack();
    let points = sample_points(problem, entry, samples, seed);
    let partners = sample_points(problem, entry, samples, seed.wrapping_add(1));
    let few = &points[..points.len().min(50)];
    let mut reports = vec![diagnostics::jacobian_check(problem.map(), &points)];

    reports.extend(diagnostics::outer_invariant_checks(problem.outer(), samples, 10.0, seed));
    reports.extend(diagnostics::set_invariant_checks(problem.set(), samples, 10.0, seed));
    match diagnostics::model_checks(problem, &points, 1.0, seed) {
        Ok(r) => reports.extend(r),
        Err(_) => reports.push(errored("model")),
    }

    let per_point: Vec<CheckReport> = points
        .iter()
        .enumerate()
        .map(|(i, x)| {
            diagnostics::chain_rule_check(problem, x, 4, seed.wrapping_add(i as u64)).unwrap_or_else(|_| errored("chain-rule"))
        })
        .collect();
    reports.push(CheckReport::pass_rate("chain-rule", &per_point, ALLOWED_FAILURE_FRACTION));

    let per_point: Vec<CheckReport> = points
        .iter()
        .zip(&partners)
        .enumerate()
        .map(|(i, (x, y))| {
            diagnostics::h_partial_checks(problem, x, y, seed.wrapping_add(i as u64))
                .unwrap_or_else(|_| errored("model-partials"))
        })
        .collect();
    reports.push(CheckReport::pass_rate("model-partials", &per_point, ALLOWED_FAILURE_FRACTION));

    let per_point: Vec<CheckReport> = few
        .iter()
        .enumerate()
        .map(|(i, x)| {
            diagnostics::value_function_gradient_check(problem, x, 1.0, &inner, seed.wrapping_add(i as u64))
                .unwrap_or_else(|_| errored("value-gradient"))
        })
        .collect();
    reports.push(CheckReport::pass_rate("value-gradient", &per_point, ALLOWED_FAILURE_FRACTION));

    reports.push(
        diagnostics::value_consistency_check(problem, few, &PROBE_MUS, &inner).unwrap_or_else(|_| errored("value-consistency")),
    );
    reports.push(
        diagnostics::descent_bound_check(problem, few, &PROBE_MUS, &inner, slack)
            .unwrap_or_else(|_| errored("descent-bound")),
    );
    reports.push(match diagnostics::value_gradient_bound_ratio(problem, few, 1.0, &inner) {
        Ok(ratio) => CheckReport::new(
            format!("value-gradient-ratio={}", trace::real(ratio)),
            if ratio.is_finite() { 0.0 } else { f64::INFINITY },
            0.0,
            few.len(),
            0,
        ),
        Err(_) => errored("value-gradient-ratio"),
    });

    reports.extend(short_run_checks(problem, entry, &config));

    let grid: Vec<f64> = (0..=30).map(|j| config.mu0 * config.tau.powi(j)).collect();
    reports.push(
        match diagnostics::mu_bar_probe(
            problem,
            &entry.sample_lower,
            &entry.sample_upper,
            &grid,
            &inner,
            samples.min(50),
            seed,
        ) {
            Ok(Some(mu)) => CheckReport::new(format!("mu-bar={}", trace::real(mu)), 0.0, 0.0, samples.min(50) + 3, 0),
            Ok(None) => CheckReport::new("mu-bar=none", f64::INFINITY, 0.0, samples.min(50) + 3, 0),
            Err(_) => errored("mu-bar"),
        },
    );
    reports
}

fn short_run_checks(problem: &CompositeProblem, entry: &RegistryEntry, config: &SolverConfig) -> Vec<CheckReport> {
    let cfg = SolverConfig { max_outer_iterations: SHORT_RUN_ITERATIONS, ..*config };
    match run(problem, &entry.default_x0, &cfg) {
        Ok(outcome) => {
            let slack = config.slack();
            let feasible = outcome
                .trace
                .iter()
                .map(|r| &r.x)
                .chain(std::iter::once(&outcome.final_x))
                .all(|x| problem.set().contains(x, compgn_core::driver::FEASIBILITY_TOLERANCE));
            vec![
                diagnostics::accepted_step_check(&outcome.trace, slack),
                diagnostics::monotone_objective_check(&outcome.trace, slack),
                diagnostics::descent_chain_check(&outcome.trace, DESCENT_CHAIN_SLACK),
                CheckReport::new("feasible-iterates", if feasible { 0.0 } else { 1.0 }, 0.0, outcome.trace.len(), 0),
            ]
        }
        Err(_) => vec![errored("short-run")],
    }
}
