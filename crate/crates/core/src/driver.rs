//! The outer loop: candidate computation, μ-backtracking and update.
//!
//! ```text
//! Step 1. μ_k = μ₀;  x̃ = p_{μ_k}(x_k)
//! Step 2. while g(F(x̃)) > h(x_k, x̃) + (μ_k/2)‖x̃ − x_k‖²:  μ_k ← τ μ_k;  x̃ = p_{μ_k}(x_k)
//! Step 3. x_{k+1} = x̃
//! ```

use alloc::vec::Vec;
use core::fmt;

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::problem::CompositeProblem;
use crate::subproblem::{solve_linearized, InnerConfig, Linearization, SubproblemSolution};

/// Membership tolerance for iterates in `D`.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-10;

/// Smallest inner tolerance the step-size-driven policy may request.
const INNER_TOLERANCE_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub mu0: f64,
    pub tau: f64,
    /// Stop once `‖x_{k+1} − x_k‖` falls to this value.
    pub step_tolerance: f64,
    pub max_outer_iterations: usize,
    /// `‖x_k‖` at or above this counts as divergence to infinity.
    pub divergence_norm_bound: f64,
    pub max_backtracks_per_iteration: usize,
    pub inner: InnerConfig,
    /// Restart every iteration from `μ₀`. When false, start from `μ_{k−1}/τ`.
    pub reset_mu_each_iteration: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu0: 1.0,
            tau: 2.0,
            step_tolerance: 1e-8,
            max_outer_iterations: 10_000,
            divergence_norm_bound: 1e10,
            max_backtracks_per_iteration: 60,
            inner: InnerConfig::default(),
            reset_mu_each_iteration: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let bad = |what: &str, v: f64| Err(Error::InvalidArgument(alloc::format!("{what} is invalid: {v}")));
        if !positive(self.mu0) {
            return bad("mu0", self.mu0);
        }
        if !(self.tau > 1.0 && self.tau.is_finite()) {
            return bad("tau (must exceed 1)", self.tau);
        }
        if !positive(self.step_tolerance) {
            return bad("step tolerance", self.step_tolerance);
        }
        if !(self.divergence_norm_bound > 0.0) {
            return bad("divergence bound", self.divergence_norm_bound);
        }
        self.inner.validate()
    }

    /// Slack allowed in inequalities that an exact subproblem solution would
    /// satisfy exactly.
    pub fn slack(&self) -> f64 {
        10.0 * self.inner.tolerance
    }
}

/// Outcome of one backtracking pass (Steps 1 and 2).
#[derive(Debug, Clone)]
pub struct StepResult {
    pub x_next: Vec<f64>,
    pub mu_accepted: f64,
    pub backtracks: usize,
    /// Subproblem solution at the accepted μ.
    pub solution: SubproblemSolution,
    /// Inner iterations summed over all tried values of μ.
    pub inner_iterations: usize,
    /// `g(F(x_k))`
    pub objective: f64,
    /// `g(F(x_{k+1}))`
    pub next_objective: f64,
}

/// Runs Steps 1–2 from `x_k` starting at `config.mu0`.
pub fn backtracking_step(problem: &CompositeProblem, x_k: &[f64], config: &SolverConfig) -> Result<StepResult> {
    config.validate()?;
    check_dim("point", problem.n(), x_k.len())?;
    if !problem.set().contains(x_k, FEASIBILITY_TOLERANCE) {
        return Err(Error::InvalidArgument("backtracking requires a feasible point".into()));
    }
    let lin = Linearization::new(problem, x_k)?;
    backtrack(problem, &lin, config.mu0, config, &config.inner, None)
}

fn backtrack(
    problem: &CompositeProblem,
    lin: &Linearization,
    mu_start: f64,
    config: &SolverConfig,
    inner: &InnerConfig,
    warm_dual: Option<&[f64]>,
) -> Result<StepResult> {
    let objective = lin.objective(problem);
    let slack = config.slack();
    let mut mu = mu_start;
    let mut warm = warm_dual.map(<[f64]>::to_vec);
    let mut inner_iterations = 0;
    for backtracks in 0..=config.max_backtracks_per_iteration {
        let mut solution = solve_linearized(problem, lin, mu, inner, warm.as_deref())?;
        inner_iterations += solution.inner_iterations;
        // x_k itself is feasible with model value g(F(x_k)); a computed
        // candidate that does worse is inner-solver noise around x_k.
        if solution.value > objective {
            solution.p = lin.x.clone();
            solution.value = objective;
        }
        let next_objective = problem.outer().value(&problem.map().value(&solution.p));
        if next_objective <= solution.value + slack {
            return Ok(StepResult {
                x_next: solution.p.clone(),
                mu_accepted: mu,
                backtracks,
                solution,
                inner_iterations,
                objective,
                next_objective,
            });
        }
        warm = Some(solution.dual);
        mu *= config.tau;
    }
    Err(Error::BacktrackBudget { backtracks: config.max_backtracks_per_iteration, mu })
}

/// One row of the run trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub x: Vec<f64>,
    /// `g(F(x_k))`
    pub objective: f64,
    pub mu_k: f64,
    /// `‖x_{k+1} − x_k‖`
    pub step_norm: f64,
    pub backtracks: usize,
    pub inner_iterations: usize,
    /// `‖x_k − p_{μ_k}(x_k)‖`
    pub criticality: f64,
    pub cumulative_step: f64,
    /// `V_{μ_k}(x_k)` as computed by the accepted subproblem solve.
    pub model_value: f64,
    /// `g(F(x_{k+1}))`
    pub next_objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    ConvergedCritical,
    DivergingNorm,
    OuterBudgetExhausted,
    BacktrackBudgetExhausted,
    InnerFailure,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::ConvergedCritical => "converged-critical",
            RunStatus::DivergingNorm => "diverging-norm",
            RunStatus::OuterBudgetExhausted => "outer-budget-exhausted",
            RunStatus::BacktrackBudgetExhausted => "backtrack-budget-exhausted",
            RunStatus::InnerFailure => "inner-failure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            RunStatus::ConvergedCritical,
            RunStatus::DivergingNorm,
            RunStatus::OuterBudgetExhausted,
            RunStatus::BacktrackBudgetExhausted,
            RunStatus::InnerFailure,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub final_x: Vec<f64>,
    pub final_objective: f64,
    pub trace: Vec<IterateRecord>,
    /// The starting point was outside `D` and was replaced by its projection.
    pub projected_start: bool,
    /// `‖x − p_μ(x)‖` recomputed at the final iterate on convergence.
    pub final_criticality: Option<f64>,
    /// Set for `InnerFailure` and `BacktrackBudgetExhausted`.
    pub error: Option<Error>,
}

impl RunOutcome {
    pub fn final_mu(&self) -> Option<f64> {
        self.trace.last().map(|r| r.mu_k)
    }
}

fn inner_for_step(base: &InnerConfig, mu: f64, previous_step: Option<f64>) -> InnerConfig {
    let tolerance = match previous_step {
        Some(s) => base.tolerance.min(1e-4 * mu * s * s).max(INNER_TOLERANCE_FLOOR.min(base.tolerance)),
        None => base.tolerance,
    };
    InnerConfig { tolerance, ..*base }
}

/// Iterates Steps 1–3 from `x0` until the step falls below tolerance, the
/// iterates leave the divergence bound, or a budget runs out.
///
/// Only invalid arguments produce `Err`; every way the iteration can stop is
/// reported through [`RunOutcome::status`].
pub fn run(problem: &CompositeProblem, x0: &[f64], config: &SolverConfig) -> Result<RunOutcome> {
    config.validate()?;
    check_dim("starting point", problem.n(), x0.len())?;
    let projected_start = !problem.set().contains(x0, FEASIBILITY_TOLERANCE);
    let mut x = if projected_start { problem.set().project(x0) } else { x0.to_vec() };

    let mut trace = Vec::new();
    let mut cumulative_step = 0.0;
    let mut previous_mu: Option<f64> = None;
    let mut previous_step: Option<f64> = None;
    let mut warm: Option<Vec<f64>> = None;

    let outcome = |status, x: Vec<f64>, trace, final_criticality, error| -> Result<RunOutcome> {
        let final_objective = problem.objective(&x)?;
        Ok(RunOutcome { status, final_x: x, final_objective, trace, projected_start, final_criticality, error })
    };

    for k in 0..config.max_outer_iterations {
        if linalg::norm(&x) >= config.divergence_norm_bound {
            return outcome(RunStatus::DivergingNorm, x, trace, None, None);
        }
        let lin = Linearization::new(problem, &x)?;
        let mu_start = match previous_mu {
            Some(mu) if !config.reset_mu_each_iteration => mu / config.tau,
            _ => config.mu0,
        };
        let inner = inner_for_step(&config.inner, mu_start, previous_step);
        let step = match backtrack(problem, &lin, mu_start, config, &inner, warm.as_deref()) {
            Ok(step) => step,
            Err(e @ Error::BacktrackBudget { .. }) => {
                return outcome(RunStatus::BacktrackBudgetExhausted, x, trace, None, Some(e));
            }
            Err(e @ Error::InnerBudget { .. }) => return outcome(RunStatus::InnerFailure, x, trace, None, Some(e)),
            Err(e) => return Err(e),
        };
        let step_norm = linalg::dist(&step.x_next, &x);
        cumulative_step += step_norm;
        trace.push(IterateRecord {
            k,
            x: x.clone(),
            objective: step.objective,
            mu_k: step.mu_accepted,
            step_norm,
            backtracks: step.backtracks,
            inner_iterations: step.inner_iterations,
            criticality: linalg::dist(&x, &step.solution.p),
            cumulative_step,
            model_value: step.solution.value,
            next_objective: step.next_objective,
        });
        previous_mu = Some(step.mu_accepted);
        previous_step = Some(step_norm);
        warm = Some(step.solution.dual.clone());
        x = step.x_next;

        if step_norm == 0.0 {
            return outcome(RunStatus::ConvergedCritical, x, trace, Some(0.0), None);
        }
        if step_norm <= config.step_tolerance {
            let mu = step.mu_accepted;
            let inner = inner_for_step(&config.inner, mu, Some(step_norm));
            let lin = Linearization::new(problem, &x)?;
            match solve_linearized(problem, &lin, mu, &inner, warm.as_deref()) {
                Ok(sol) => {
                    let criticality = linalg::dist(&x, &sol.p);
                    if criticality <= 10.0 * config.step_tolerance * (1.0 + mu) {
                        return outcome(RunStatus::ConvergedCritical, x, trace, Some(criticality), None);
                    }
                }
                Err(e @ Error::InnerBudget { .. }) => {
                    return outcome(RunStatus::InnerFailure, x, trace, None, Some(e));
                }
                Err(e) => return Err(e),
            }
        }
    }
    if linalg::norm(&x) >= config.divergence_norm_bound {
        return outcome(RunStatus::DivergingNorm, x, trace, None, None);
    }
    outcome(RunStatus::OuterBudgetExhausted, x, trace, None, None)
}
