use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use compgn::commands::{self, CheckSpec};
use compgn::registry::Params;
use compgn::spec::RunSpec;

#[derive(Parser)]
#[command(name = "compgn", version, about = "Backtracking composite Gauss-Newton solver and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List registered problems.
    List,
    /// Solve a registered problem and write the iteration trace.
    Solve(SolveArgs),
    /// Run the numerical diagnostics on a registered problem.
    Check(CheckArgs),
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let v = v.parse::<f64>().map_err(|e| format!("{k}: {e}"))?;
    Ok((k.to_string(), v))
}

#[derive(clap::Args)]
struct SolveArgs {
    /// JSON run specification; flags override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// Problem parameter, repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    #[arg(long)]
    mu0: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Stop when the step norm falls to this value.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    #[arg(long = "max-backtracks")]
    max_backtracks: Option<usize>,
    #[arg(long = "divergence-bound")]
    divergence_bound: Option<f64>,
    #[arg(long = "inner-tol")]
    inner_tol: Option<f64>,
    /// Start μ from the previous accepted value over τ instead of μ₀.
    #[arg(long = "warm-mu")]
    warm_mu: bool,
    /// Starting point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    /// Trace output path (stdout when absent).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Leave the timestamp out of the trace so output is byte-reproducible.
    #[arg(long = "no-timestamp")]
    no_timestamp: bool,
}

#[derive(clap::Args)]
struct CheckArgs {
    #[arg(long)]
    problem: String,
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Report output path (stdout when absent).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Scale the Jacobian oracle by 1 + FRACTION (negative control).
    #[arg(long = "corrupt-jacobian")]
    corrupt_jacobian: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { commands::EXIT_USAGE as u8 } else { 0 });
        }
    };
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    let code = match cli.command {
        Command::List => match commands::list_problems(&mut stdout) {
            Ok(()) => commands::EXIT_OK,
            Err(_) => commands::EXIT_USAGE,
        },
        Command::Solve(a) => {
            let file = match a.spec.as_deref().map(RunSpec::from_json_file).transpose() {
                Ok(f) => f.unwrap_or_default(),
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(commands::EXIT_USAGE as u8);
                }
            };
            let flags = RunSpec {
                problem: a.problem,
                params: a.params.into_iter().collect::<Params>(),
                mu0: a.mu0,
                tau: a.tau,
                tol: a.tol,
                max_iter: a.max_iter,
                max_backtracks: a.max_backtracks,
                divergence_bound: a.divergence_bound,
                inner_tol: a.inner_tol,
                warm_mu: a.warm_mu.then_some(true),
                x0: a.x0,
                trace: a.trace,
                seed: a.seed,
                no_timestamp: a.no_timestamp.then_some(true),
            };
            commands::solve_command(&file.overridden_by(flags), &mut stdout, &mut stderr)
        }
        Command::Check(a) => {
            let spec = CheckSpec {
                problem: a.problem,
                params: a.params.into_iter().collect(),
                seed: a.seed,
                samples: a.samples,
                report: a.report,
                corrupt_jacobian: a.corrupt_jacobian,
            };
            commands::check_command(&spec, &mut stdout, &mut stderr)
        }
    };
    ExitCode::from(code as u8)
}
