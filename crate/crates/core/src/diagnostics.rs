//! Numerical certificates for the structural facts the solver relies on.
//!
//! * chain rule: `∇(g∘F)(x) = ∇F(x)ᵀv` with `v ∈ ∂g(F(x))`, against
//!   finite differences;
//! * partials of the model `h`:
//!   `∂_y h(x, y) = ∇F(x)ᵀv` and `∂_x h(x, y) = (Σᵢ vᵢ∇²fᵢ(x))(y − x)`;
//! * value function gradient
//!   `∇V_μ(x) = (Σᵢ vᵢ∇²fᵢ(x))(p_μ(x) − x) + μ(x − p_μ(x))`;
//! * the inequalities `V_μ(x) ≤ g(F(x)) − (μ/2)‖p_μ(x) − x‖²` and the
//!   descent chain along a run;
//! * a probe for the threshold `μ̄` above which the backtracking test always
//!   passes on a bounded region.
//!
//! Derivative comparisons skip points where `g` is not differentiable at
//! the relevant argument. The probe evaluates `∂g` at 8 random points at
//! distance `1e-7` and requires every returned subgradient to agree within
//! `1e-9`. All sampling is driven by an explicit seed.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::driver::IterateRecord;
use crate::error::{check_dim, Result};
use crate::linalg::{self, Matrix};
use crate::problem::{CompositeProblem, FeasibleSet, OuterConvex, SmoothMap};
use crate::subproblem::{solve_linearized, solve_subproblem, InnerConfig, Linearization};

const PROBE_DIRECTIONS: usize = 4;
const PROBE_RADIUS: f64 = 1e-7;
const PROBE_AGREEMENT: f64 = 1e-9;

/// Relative deviation allowed in chain-rule and model-partial comparisons.
pub const DERIVATIVE_TOLERANCE: f64 = 1e-5;
/// Relative deviation allowed for the value-function gradient.
pub const VALUE_GRADIENT_TOLERANCE: f64 = 1e-4;
/// Inner tolerance used when differencing `V_μ`.
const VALUE_FD_INNER_TOLERANCE: f64 = 1e-13;

/// Result of one numerical check. `pass ⇔ max_violation ≤ tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub max_violation: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub skipped: usize,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, max_violation: f64, tolerance: f64, samples: usize, skipped: usize) -> Self {
        Self {
            name: name.into(),
            max_violation,
            tolerance,
            samples,
            skipped,
            pass: max_violation <= tolerance,
        }
    }

    /// A check that had nothing to evaluate.
    pub fn skipped(name: impl Into<String>) -> Self {
        Self::new(name, 0.0, 0.0, 0, 1)
    }

    pub fn is_skipped(&self) -> bool {
        self.samples == 0 && self.skipped > 0
    }

    /// Folds many per-point reports into one whose violation is the fraction
    /// of evaluated (non-skipped) points that failed.
    pub fn pass_rate(name: impl Into<String>, reports: &[CheckReport], allowed_failure_fraction: f64) -> Self {
        let evaluated: Vec<&CheckReport> = reports.iter().filter(|r| !r.is_skipped()).collect();
        let skipped = reports.len() - evaluated.len();
        let failed = evaluated.iter().filter(|r| !r.pass).count();
        let fraction = if evaluated.is_empty() { 0.0 } else { failed as f64 / evaluated.len() as f64 };
        Self::new(name, fraction, allowed_failure_fraction, evaluated.len(), skipped)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit_direction(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let d: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = linalg::norm(&d);
        if n > 1e-3 {
            return d.into_iter().map(|v| v / n).collect();
        }
    }
}

/// Uniform samples from the box `[lower, upper]`.
pub fn sample_box(lower: &[f64], upper: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| {
            lower
                .iter()
                .zip(upper)
                .map(|(l, u)| if l < u { rng.gen_range(*l..*u) } else { *l })
                .collect()
        })
        .collect()
}

/// Whether `g` looks differentiable at `z`.
///
/// Along random directions `d` the symmetric subgradient differences at
/// radii `r` and `r/2` must scale linearly, which holds to `O(r³)` for a
/// smooth gradient and fails by the jump size when a kink lies within `r`.
pub fn is_differentiable_at(outer: &dyn OuterConvex, z: &[f64], seed: u64) -> bool {
    let mut rng = rng(seed);
    let spread = |d: &[f64], r: f64| {
        let plus: Vec<f64> = z.iter().zip(d).map(|(a, b)| a + r * b).collect();
        let minus: Vec<f64> = z.iter().zip(d).map(|(a, b)| a - r * b).collect();
        linalg::sub(&outer.subgradient(&plus), &outer.subgradient(&minus))
    };
    (0..PROBE_DIRECTIONS).all(|_| {
        let d = unit_direction(&mut rng, z.len());
        let wide = spread(&d, PROBE_RADIUS);
        let narrow = spread(&d, 0.5 * PROBE_RADIUS);
        wide.iter().zip(&narrow).all(|(w, n)| (w - 2.0 * n).abs() <= PROBE_AGREEMENT)
    })
}

/// `‖a − b‖ / max(1, ‖b‖)`, with `b` the reference.
pub fn relative_deviation(a: &[f64], b: &[f64]) -> f64 {
    linalg::dist(a, b) / linalg::norm(b).max(1.0)
}

fn fd_step(x: &[f64]) -> f64 {
    1e-6 * (1.0 + linalg::norm(x))
}

/// Central-difference gradient with step `1e-6 (1 + ‖x‖)`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let h = fd_step(x);
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let xi = xp[i];
            xp[i] = xi + h;
            let fp = f(&xp);
            xp[i] = xi - h;
            let fm = f(&xp);
            xp[i] = xi;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Jacobian of a map, column by column.
pub fn fd_jacobian(map: &dyn SmoothMap, x: &[f64]) -> Matrix {
    let (m, n) = (map.output_dim(), map.input_dim());
    let h = fd_step(x);
    let mut j = Matrix::zeros(m, n);
    let mut xp = x.to_vec();
    for c in 0..n {
        let xc = xp[c];
        xp[c] = xc + h;
        let fp = map.value(&xp);
        xp[c] = xc - h;
        let fm = map.value(&xp);
        xp[c] = xc;
        for r in 0..m {
            j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    j
}

/// Jacobian oracle against central differences, relative to `max(1, ‖J_fd‖_F)`.
pub fn jacobian_check(map: &dyn SmoothMap, points: &[Vec<f64>]) -> CheckReport {
    let worst = points
        .iter()
        .map(|x| relative_deviation(map.jacobian(x).as_slice(), fd_jacobian(map, x).as_slice()))
        .fold(0.0, f64::max);
    CheckReport::new("jacobian-fd", worst, DERIVATIVE_TOLERANCE, points.len(), 0)
}

/// Chain rule for `g∘F` at `x`: the analytic gradient `∇F(x)ᵀv` against
/// coordinate differences and `n_directions` random directional differences.
pub fn chain_rule_check(problem: &CompositeProblem, x: &[f64], n_directions: usize, seed: u64) -> Result<CheckReport> {
    check_dim("point", problem.n(), x.len())?;
    let name = "chain-rule";
    let fx = problem.map().value(x);
    if !is_differentiable_at(problem.outer(), &fx, seed) {
        return Ok(CheckReport::skipped(name));
    }
    let v = problem.outer().subgradient(&fx);
    let analytic = problem.map().jacobian(x).tr_mul_vec(&v);
    let f = |y: &[f64]| problem.outer().value(&problem.map().value(y));
    let mut worst = relative_deviation(&analytic, &fd_gradient(f, x));

    let mut rng = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let h = fd_step(x);
    for _ in 0..n_directions {
        let d = unit_direction(&mut rng, x.len());
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        linalg::axpy(h, &d, &mut xp);
        linalg::axpy(-h, &d, &mut xm);
        let fd = (f(&xp) - f(&xm)) / (2.0 * h);
        let an = linalg::dot(&analytic, &d);
        worst = worst.max((an - fd).abs() / fd.abs().max(1.0));
    }
    Ok(CheckReport::new(name, worst, DERIVATIVE_TOLERANCE, 1 + n_directions, 0))
}

/// Both partial derivative formulas of the model `h` at `(x, y)`.
pub fn h_partial_checks(problem: &CompositeProblem, x: &[f64], y: &[f64], seed: u64) -> Result<CheckReport> {
    check_dim("point x", problem.n(), x.len())?;
    check_dim("point y", problem.n(), y.len())?;
    let name = "model-partials";
    let lin = Linearization::new(problem, x)?;
    let z = crate::problem::linearize(&lin.fx, &lin.jacobian, x, y);
    if !is_differentiable_at(problem.outer(), &z, seed) {
        return Ok(CheckReport::skipped(name));
    }
    let v = problem.outer().subgradient(&z);
    let y_partial = lin.jacobian.tr_mul_vec(&v);
    let x_partial = problem.hessian_vector(x, &v, &linalg::sub(y, x));

    let fd_y = fd_gradient(|yy: &[f64]| lin.model(problem, yy), y);
    let fd_x = fd_gradient(
        |xx: &[f64]| problem.model_h(xx, y).unwrap_or(f64::NAN),
        x,
    );
    let worst = relative_deviation(&y_partial, &fd_y).max(relative_deviation(&x_partial, &fd_x));
    Ok(CheckReport::new(name, worst, DERIVATIVE_TOLERANCE, 2, 0))
}

/// `(Σᵢ vᵢ∇²fᵢ(x))(p − x) + μ(x − p)` with `p = p_μ(x)` and `v` the
/// subgradient oracle at `F(x) + ∇F(x)(p − x)`.
pub fn value_function_gradient(
    problem: &CompositeProblem,
    x: &[f64],
    mu: f64,
    cfg: &InnerConfig,
) -> Result<Vec<f64>> {
    let lin = Linearization::new(problem, x)?;
    let sol = solve_linearized(problem, &lin, mu, cfg, None)?;
    Ok(gradient_from_solution(problem, &lin, &sol.p, mu))
}

fn gradient_from_solution(problem: &CompositeProblem, lin: &Linearization, p: &[f64], mu: f64) -> Vec<f64> {
    let x = &lin.x;
    let z = crate::problem::linearize(&lin.fx, &lin.jacobian, x, p);
    let v = problem.outer().subgradient(&z);
    let step = linalg::sub(p, x);
    let mut grad = problem.hessian_vector(x, &v, &step);
    linalg::axpy(-mu, &step, &mut grad);
    grad
}

/// The value-function gradient formula against central differences of
/// `x ↦ V_μ(x)`.
///
/// Skipped where `g` is not differentiable at `F(x) + ∇F(x)(p − x)`. The
/// stencil may leave `D`; `V_μ` is defined on all of `Rⁿ`.
pub fn value_function_gradient_check(
    problem: &CompositeProblem,
    x: &[f64],
    mu: f64,
    cfg: &InnerConfig,
    seed: u64,
) -> Result<CheckReport> {
    let name = "value-gradient";
    let tight = InnerConfig { tolerance: cfg.tolerance.min(VALUE_FD_INNER_TOLERANCE), ..*cfg };
    let lin = Linearization::new(problem, x)?;
    let sol = solve_linearized(problem, &lin, mu, &tight, None)?;
    let z = crate::problem::linearize(&lin.fx, &lin.jacobian, x, &sol.p);
    if !is_differentiable_at(problem.outer(), &z, seed) {
        return Ok(CheckReport::skipped(name));
    }
    let h = fd_step(x);
    let mut fd = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let mut values = [0.0; 2];
        for (slot, sign) in [1.0, -1.0].into_iter().enumerate() {
            let mut xs = x.to_vec();
            xs[i] += sign * h;
            let l = Linearization::new(problem, &xs)?;
            values[slot] = solve_linearized(problem, &l, mu, &tight, Some(&sol.dual))?.value;
        }
        fd.push((values[0] - values[1]) / (2.0 * h));
    }
    let formula = gradient_from_solution(problem, &lin, &sol.p, mu);
    Ok(CheckReport::new(name, relative_deviation(&formula, &fd), VALUE_GRADIENT_TOLERANCE, 1, 0))
}

/// `‖∇V_μ(x)‖ / ((1 + μ)‖x − p_μ(x)‖)` at each sample; the maximum is an
/// empirical stand-in for the constant bounding `dist(0, ∂V_μ)` by the
/// criticality measure. Points with `p_μ(x) = x` are ignored.
pub fn value_gradient_bound_ratio(
    problem: &CompositeProblem,
    points: &[Vec<f64>],
    mu: f64,
    cfg: &InnerConfig,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in points {
        let lin = Linearization::new(problem, x)?;
        let sol = solve_linearized(problem, &lin, mu, cfg, None)?;
        let d = linalg::dist(x, &sol.p);
        if d > 0.0 {
            let g = gradient_from_solution(problem, &lin, &sol.p, mu);
            worst = worst.max(linalg::norm(&g) / ((1.0 + mu) * d));
        }
    }
    Ok(worst)
}

/// `V_μ(x)` reported by the solver against `h(x, p) + (μ/2)‖p − x‖²`
/// recomputed from scratch.
pub fn value_consistency_check(
    problem: &CompositeProblem,
    points: &[Vec<f64>],
    mus: &[f64],
    cfg: &InnerConfig,
) -> Result<CheckReport> {
    let mut worst: f64 = 0.0;
    for x in points {
        for &mu in mus {
            let sol = solve_subproblem(problem, x, mu, cfg)?;
            let d = linalg::dist(x, &sol.p);
            let recomputed = problem.model_h(x, &sol.p)? + 0.5 * mu * d * d;
            worst = worst.max((recomputed - sol.value).abs());
        }
    }
    Ok(CheckReport::new("value-consistency", worst, 1e-12, points.len() * mus.len(), 0))
}

/// `V_μ(x) ≤ g(F(x)) − (μ/2)‖p_μ(x) − x‖²` at every point and `μ`.
pub fn descent_bound_check(
    problem: &CompositeProblem,
    points: &[Vec<f64>],
    mus: &[f64],
    cfg: &InnerConfig,
    tolerance: f64,
) -> Result<CheckReport> {
    let mut worst = f64::NEG_INFINITY;
    for x in points {
        let fx = problem.objective(x)?;
        for &mu in mus {
            let sol = solve_subproblem(problem, x, mu, cfg)?;
            let d = linalg::dist(x, &sol.p);
            worst = worst.max(sol.value - (fx - 0.5 * mu * d * d));
        }
    }
    Ok(CheckReport::new("descent-bound", worst.max(0.0), tolerance, points.len() * mus.len(), 0))
}

/// Every accepted step satisfies `g(F(x_{k+1})) ≤ V_{μ_k}(x_k)`, which is the
/// backtracking exit test.
pub fn accepted_step_check(trace: &[IterateRecord], tolerance: f64) -> CheckReport {
    let worst = trace
        .iter()
        .map(|r| r.next_objective - r.model_value)
        .fold(0.0, f64::max);
    CheckReport::new("accepted-step", worst, tolerance, trace.len(), 0)
}

/// The objective column never increases.
pub fn monotone_objective_check(trace: &[IterateRecord], tolerance: f64) -> CheckReport {
    let worst = trace
        .windows(2)
        .map(|w| w[1].objective - w[0].objective)
        .chain(trace.iter().map(|r| r.next_objective - r.objective))
        .fold(0.0, f64::max);
    CheckReport::new("monotone-objective", worst, tolerance, trace.len(), 0)
}

/// The descent chain
/// `V_{μ_k}(x_k) + (μ_k/2)‖x_{k+1} − x_k‖² ≤ g(F(x_k)) ≤ V_{μ_{k−1}}(x_{k−1})`.
pub fn descent_chain_check(trace: &[IterateRecord], tolerance: f64) -> CheckReport {
    let mut worst: f64 = 0.0;
    for (i, r) in trace.iter().enumerate() {
        let left = r.model_value + 0.5 * r.mu_k * r.step_norm * r.step_norm - r.objective;
        worst = worst.max(left);
        if i > 0 {
            worst = worst.max(r.objective - trace[i - 1].model_value);
        }
    }
    CheckReport::new("descent-chain", worst, tolerance, trace.len(), 0)
}

/// Smallest `μ` in `mu_grid` (ascending) for which the backtracking test
/// `g(F(p_μ(x))) ≤ h(x, p_μ(x)) + (μ/2)‖p_μ(x) − x‖²` holds at every
/// sampled `x` of the box `[lower, upper]` (projected onto `D`).
///
/// The samples are the box center, both extreme corners and `n_samples`
/// uniform draws. With `n_samples == 0` the condition is vacuous and the
/// first grid value is returned. `None` means no grid value worked.
pub fn mu_bar_probe(
    problem: &CompositeProblem,
    lower: &[f64],
    upper: &[f64],
    mu_grid: &[f64],
    cfg: &InnerConfig,
    n_samples: usize,
    seed: u64,
) -> Result<Option<f64>> {
    check_dim("region lower", problem.n(), lower.len())?;
    check_dim("region upper", problem.n(), upper.len())?;
    if n_samples == 0 {
        return Ok(mu_grid.first().copied());
    }
    let center: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect();
    let mut points = alloc::vec![center, lower.to_vec(), upper.to_vec()];
    points.extend(sample_box(lower, upper, n_samples, seed));
    let lins = points
        .iter()
        .map(|x| Linearization::new(problem, &problem.set().project(x)))
        .collect::<Result<Vec<_>>>()?;
    let slack = 10.0 * cfg.tolerance;
    'grid: for &mu in mu_grid {
        for lin in &lins {
            let sol = solve_linearized(problem, lin, mu, cfg, None)?;
            let actual = problem.outer().value(&problem.map().value(&sol.p));
            if actual > sol.value + slack {
                continue 'grid;
            }
        }
        return Ok(Some(mu));
    }
    Ok(None)
}

/// Convexity, subgradient inequality and prox optimality of `g` on random
/// samples drawn from `[-scale, scale]ᵐ`.
pub fn outer_invariant_checks(outer: &dyn OuterConvex, n_samples: usize, scale: f64, seed: u64) -> Vec<CheckReport> {
    let m = outer.dim();
    let mut rng = rng(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..m).map(|_| rng.gen_range(-scale..scale)).collect() };
    let (mut convexity, mut subgradient, mut prox): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..n_samples {
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let lambda: f64 = rng.gen_range(0.0..=1.0);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect();
        let rhs = lambda * outer.value(&a) + (1.0 - lambda) * outer.value(&b);
        convexity = convexity.max(outer.value(&mid) - rhs);

        let v = outer.subgradient(&a);
        let lower = outer.value(&a) + linalg::dot(&v, &linalg::sub(&b, &a));
        subgradient = subgradient.max(lower - outer.value(&b));

        let t: f64 = rng.gen_range(0.01..10.0);
        if let Ok(w) = outer.prox(&a, t) {
            let s: Vec<f64> = a.iter().zip(&w).map(|(z, wi)| (z - wi) / t).collect();
            let lower = outer.value(&w) + linalg::dot(&s, &linalg::sub(&b, &w));
            prox = prox.max(lower - outer.value(&b));
        } else {
            prox = f64::INFINITY;
        }
    }
    alloc::vec![
        CheckReport::new("outer-convexity", convexity, 1e-12 * (1.0 + scale * scale), n_samples, 0),
        CheckReport::new("outer-subgradient", subgradient, 1e-12 * (1.0 + scale * scale), n_samples, 0),
        CheckReport::new("outer-prox", prox, 1e-8, n_samples, 0),
    ]
}

/// Idempotence and the variational inequality
/// `⟨x − Π(x), y − Π(x)⟩ ≤ 0` for feasible `y`.
pub fn set_invariant_checks(set: &dyn FeasibleSet, n_samples: usize, scale: f64, seed: u64) -> Vec<CheckReport> {
    let n = set.dim();
    let mut rng = rng(seed);
    let (mut idempotence, mut variational): (f64, f64) = (0.0, 0.0);
    for _ in 0..n_samples {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..scale)).collect();
        let px = set.project(&x);
        let ppx = set.project(&px);
        if ppx != px {
            idempotence = idempotence.max(linalg::dist(&ppx, &px).max(f64::MIN_POSITIVE));
        }
        let y0: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..scale)).collect();
        let y = set.project(&y0);
        let r = linalg::sub(&x, &px);
        variational = variational.max(linalg::dot(&r, &linalg::sub(&y, &px)));
    }
    alloc::vec![
        CheckReport::new("set-idempotent", idempotence, 0.0, n_samples, 0),
        CheckReport::new("set-variational", variational, 1e-10 * (1.0 + scale * scale), n_samples, 0),
    ]
}

/// `h(x, ·)` is convex along random segments and `h(x, x) = g(F(x))`.
pub fn model_checks(problem: &CompositeProblem, points: &[Vec<f64>], scale: f64, seed: u64) -> Result<Vec<CheckReport>> {
    let n = problem.n();
    let mut rng = rng(seed);
    let (mut convexity, mut diagonal): (f64, f64) = (0.0, 0.0);
    for x in points {
        let lin = Linearization::new(problem, x)?;
        let a: Vec<f64> = (0..n).map(|i| x[i] + rng.gen_range(-scale..scale)).collect();
        let b: Vec<f64> = (0..n).map(|i| x[i] + rng.gen_range(-scale..scale)).collect();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
        let gap = lin.model(problem, &mid) - 0.5 * (lin.model(problem, &a) + lin.model(problem, &b));
        let magnitude = 1.0 + lin.model(problem, &a).abs() + lin.model(problem, &b).abs();
        convexity = convexity.max(gap / magnitude);
        let fx = problem.objective(x)?;
        diagonal = diagonal.max((lin.model(problem, x) - fx).abs() / (1.0 + fx.abs()));
    }
    Ok(alloc::vec![
        CheckReport::new("model-convexity", convexity, 1e-12, points.len(), 0),
        CheckReport::new("model-diagonal", diagonal, 4.0 * f64::EPSILON, points.len(), 0),
    ])
}
