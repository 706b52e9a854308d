//! The prox-linear subproblem
//!
//! ```text
//! p_μ(x) = argmin_{y ∈ D} g(F(x) + ∇F(x)(y − x)) + (μ/2)‖y − x‖²
//! V_μ(x) = min_{y ∈ D} g(F(x) + ∇F(x)(y − x)) + (μ/2)‖y − x‖²
//! ```
//!
//! The problem is μ-strongly convex. It is solved through its dual
//!
//! ```text
//! min_z  g*(z) − ⟨z, F(x)⟩ + G*(−∇F(x)ᵀz),
//! G*(q) = max_{y ∈ D} ⟨q, y − x⟩ − (μ/2)‖y − x‖²,
//! ```
//!
//! whose smooth part has gradient `−∇F(x)(y(z) − x)` with
//! `y(z) = Π_D(x − ∇F(x)ᵀz / μ)` and Lipschitz constant `‖∇F(x)‖² / μ`.
//! Accelerated proximal gradient steps on `z` use the prox of `g` (through
//! the Moreau identity) and the projection onto `D`; every primal iterate is
//! the output of a projection, so it is feasible. Momentum is reset whenever
//! the step stops pointing downhill.

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Matrix};
use crate::problem::{linearize, CompositeProblem};

/// Power-iteration settings for `‖∇F(x)‖`.
const POWER_ITERATIONS: usize = 50;
const POWER_TOLERANCE: f64 = 1e-10;
/// Safety factor on the power-iteration estimate, which approaches from below.
const NORM_SAFETY: f64 = 1.01;

/// Inner solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerConfig {
    /// Bound on the fixed-point residual at the returned point, see
    /// [`SubproblemSolution::residual`].
    pub tolerance: f64,
    pub max_inner_iterations: usize,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_inner_iterations: 100_000 }
    }
}

impl InnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tolerance > 0.0 && self.tolerance.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(alloc::format!(
                "inner tolerance must be positive, got {}",
                self.tolerance
            )))
        }
    }
}

/// Approximate `(p_μ(x), V_μ(x))` plus the certificates of the inner solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub p: Vec<f64>,
    /// `h(x, p) + (μ/2)‖p − x‖²`, recomputed from `p`.
    pub value: f64,
    pub inner_iterations: usize,
    /// `max(‖y(T z) − y(z)‖, ‖∇F(x)‖ ‖T z − z‖ / μ) / (1 + ‖x‖)` for the
    /// final dual point `z` and one exact dual step `T`. The second term
    /// keeps the certificate honest when the projection onto `D` saturates
    /// and the primal iterate stops moving before the dual has converged.
    pub residual: f64,
    pub mu: f64,
    /// Final dual iterate; a valid warm start for nearby solves.
    pub dual: Vec<f64>,
}

/// `F(x)` and `∇F(x)` frozen at one point, shared by all solves at that point.
#[derive(Debug, Clone)]
pub struct Linearization {
    pub x: Vec<f64>,
    pub fx: Vec<f64>,
    pub jacobian: Matrix,
    jacobian_norm: f64,
}

impl Linearization {
    pub fn new(problem: &CompositeProblem, x: &[f64]) -> Result<Self> {
        check_dim("point", problem.n(), x.len())?;
        let fx = problem.map().value(x);
        let jacobian = problem.map().jacobian(x);
        check_dim("map value", problem.m(), fx.len())?;
        check_dim("jacobian rows", problem.m(), jacobian.rows())?;
        check_dim("jacobian columns", problem.n(), jacobian.cols())?;
        let estimate = jacobian.spectral_norm_estimate(POWER_ITERATIONS, POWER_TOLERANCE);
        let jacobian_norm = (NORM_SAFETY * estimate).min(jacobian.frobenius_norm());
        Ok(Self { x: x.to_vec(), fx, jacobian, jacobian_norm })
    }

    /// `h(x, y)`
    pub fn model(&self, problem: &CompositeProblem, y: &[f64]) -> f64 {
        problem.outer().value(&linearize(&self.fx, &self.jacobian, &self.x, y))
    }

    /// `h(x, y) + (μ/2)‖y − x‖²`
    pub fn regularized_model(&self, problem: &CompositeProblem, y: &[f64], mu: f64) -> f64 {
        let d = linalg::dist(y, &self.x);
        self.model(problem, y) + 0.5 * mu * d * d
    }

    /// `g(F(x)) = h(x, x)`
    pub fn objective(&self, problem: &CompositeProblem) -> f64 {
        problem.outer().value(&self.fx)
    }
}

/// Solves the subproblem at `x` with proximal weight `mu`.
pub fn solve_subproblem(
    problem: &CompositeProblem,
    x: &[f64],
    mu: f64,
    cfg: &InnerConfig,
) -> Result<SubproblemSolution> {
    let lin = Linearization::new(problem, x)?;
    solve_linearized(problem, &lin, mu, cfg, None)
}

/// `‖x − p_μ(x)‖`; zero exactly at critical points.
pub fn criticality_measure(
    problem: &CompositeProblem,
    x: &[f64],
    mu: f64,
    cfg: &InnerConfig,
) -> Result<f64> {
    let sol = solve_subproblem(problem, x, mu, cfg)?;
    Ok(linalg::dist(x, &sol.p))
}

struct DualStep<'a> {
    problem: &'a CompositeProblem,
    lin: &'a Linearization,
    mu: f64,
    alpha: f64,
}

impl DualStep<'_> {
    /// `y(z) = Π_D(x − ∇F(x)ᵀz / μ)`
    fn primal(&self, z: &[f64]) -> Vec<f64> {
        let mut y = self.lin.x.clone();
        linalg::axpy(-1.0 / self.mu, &self.lin.jacobian.tr_mul_vec(z), &mut y);
        self.problem.set().project(&y)
    }

    /// One proximal gradient step from `z`, given `y = y(z)`:
    /// `z⁺ = prox_{α g*}(z + α r)` with `r = F(x) + ∇F(x)(y − x)`.
    fn step(&self, z: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let r = linearize(&self.lin.fx, &self.lin.jacobian, &self.lin.x, y);
        let w: Vec<f64> = z.iter().zip(&r).map(|(zi, ri)| zi + self.alpha * ri).collect();
        self.problem.outer().conjugate_prox(&w, self.alpha)
    }
}

/// Solves the subproblem at a precomputed linearization, optionally warm
/// started from a previous dual iterate.
pub fn solve_linearized(
    problem: &CompositeProblem,
    lin: &Linearization,
    mu: f64,
    cfg: &InnerConfig,
    warm_dual: Option<&[f64]>,
) -> Result<SubproblemSolution> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!("mu must be positive, got {mu}")));
    }
    cfg.validate()?;
    let scale = 1.0 + linalg::norm(&lin.x);
    let finish = |p: Vec<f64>, dual: Vec<f64>, inner_iterations: usize, residual: f64| {
        let value = lin.regularized_model(problem, &p, mu);
        SubproblemSolution { p, value, inner_iterations, residual, mu, dual }
    };

    // Constant model: the minimizer is the projection of x.
    if lin.jacobian_norm == 0.0 {
        let p = problem.set().project(&lin.x);
        return Ok(finish(p, alloc::vec![0.0; problem.m()], 0, 0.0));
    }

    let step = DualStep { problem, lin, mu, alpha: mu / (lin.jacobian_norm * lin.jacobian_norm) };
    let mut z = match warm_dual {
        Some(w) if w.len() == problem.m() && w.iter().all(|v| v.is_finite()) => w.to_vec(),
        _ => problem.outer().subgradient(&lin.fx),
    };
    let mut y = step.primal(&z);
    let mut extrapolated = z.clone();
    let mut y_extrapolated = y.clone();
    let mut momentum = 1.0_f64;
    let mut best = (f64::INFINITY, y.clone());

    let dual_weight = lin.jacobian_norm / mu;
    let residual_of = |y_a: &[f64], y_b: &[f64], z_a: &[f64], z_b: &[f64]| {
        linalg::dist(y_a, y_b).max(dual_weight * linalg::dist(z_a, z_b)) / scale
    };

    for k in 1..=cfg.max_inner_iterations {
        let z_next = step.step(&extrapolated, &y_extrapolated)?;
        let y_next = step.primal(&z_next);
        let successive = residual_of(&y_next, &y, &z_next, &z);

        if successive <= cfg.tolerance {
            // Certify with one plain step from the current dual point.
            let z_check = step.step(&z_next, &y_next)?;
            let y_check = step.primal(&z_check);
            let residual = residual_of(&y_check, &y_next, &z_check, &z_next);
            if residual <= cfg.tolerance {
                return Ok(finish(y_check, z_check, k, residual));
            }
            if residual < best.0 {
                best = (residual, y_check);
            }
        }

        // Restart when the step and the momentum disagree.
        let uphill = extrapolated
            .iter()
            .zip(&z_next)
            .zip(&z)
            .map(|((e, zn), zo)| (e - zn) * (zn - zo))
            .sum::<f64>()
            > 0.0;
        let next_momentum = if uphill { 1.0 } else { 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * momentum * momentum)) };
        let beta = if uphill { 0.0 } else { (momentum - 1.0) / next_momentum };
        extrapolated = z_next.iter().zip(&z).map(|(zn, zo)| zn + beta * (zn - zo)).collect();
        momentum = next_momentum;
        z = z_next;
        y = y_next;
        y_extrapolated = if beta == 0.0 { y.clone() } else { step.primal(&extrapolated) };
    }

    Err(Error::InnerBudget {
        iterations: cfg.max_inner_iterations,
        residual: best.0,
        best: if best.0.is_finite() { best.1 } else { y },
    })
}
