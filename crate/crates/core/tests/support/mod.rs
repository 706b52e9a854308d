//! Test-only oracles: brute-force subproblem minimization and random
//! small instances. Nothing here calls the crate's subproblem solver or any
//! projection; feasible slices come from the set's geometry directly.

#![allow(dead_code)]

use compgn_core::linalg::{self, Matrix};
use compgn_core::maps::QuadraticMap;
use compgn_core::{CompositeProblem, Outer, OuterConvex, Set};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `g(F(x) + ∇F(x)(y − x)) + (μ/2)‖y − x‖²` with the linearization frozen.
pub struct Objective<'a> {
    outer: &'a dyn OuterConvex,
    fx: Vec<f64>,
    jac: Matrix,
    x: Vec<f64>,
    mu: f64,
}

impl<'a> Objective<'a> {
    pub fn new(problem: &'a CompositeProblem, x: &[f64], mu: f64) -> Self {
        Self {
            outer: problem.outer(),
            fx: problem.map().value(x),
            jac: problem.map().jacobian(x),
            x: x.to_vec(),
            mu,
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let d = linalg::sub(y, &self.x);
        let mut z = self.jac.mul_vec(&d);
        linalg::axpy(1.0, &self.fx, &mut z);
        self.outer.value(&z) + 0.5 * self.mu * linalg::dot(&d, &d)
    }
}

/// Half-width of the search bracket along unbounded directions.
const REACH: f64 = 1e4;
const GRID: usize = 200;

/// Minimizes a convex function of one variable on `[lo, hi]`: a uniform
/// grid locates the best node, then ternary search runs on the bracket
/// formed by its neighbours.
pub fn minimize_1d(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let h = (hi - lo) / GRID as f64;
    let node = |i: usize| if i == GRID { hi } else { lo + i as f64 * h };
    let mut best = 0;
    let mut best_v = f(lo);
    for i in 1..=GRID {
        let v = f(node(i));
        if v < best_v {
            best = i;
            best_v = v;
        }
    }
    let mut a = node(best.saturating_sub(1));
    let mut b = node((best + 1).min(GRID));
    for _ in 0..200 {
        if b - a <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if f(m1) <= f(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let t = 0.5 * (a + b);
    let v = f(t);
    if v <= best_v {
        (t, v)
    } else {
        (node(best), best_v)
    }
}

/// The feasible interval of the last coordinate given the leading ones, or
/// the whole range of a one-dimensional set. `None` when the slice is empty.
fn slice(set: &Set, lead: &[f64], around: f64) -> Option<(f64, f64)> {
    let k = lead.len();
    match set {
        Set::Whole { .. } => Some((around - REACH, around + REACH)),
        Set::Box { lower, upper } => {
            let inside = lead.iter().enumerate().all(|(i, v)| *v >= lower[i] && *v <= upper[i]);
            inside.then(|| (lower[k], upper[k]))
        }
        Set::Ball { center, radius } => {
            let used: f64 = lead.iter().zip(center).map(|(v, c)| (v - c) * (v - c)).sum();
            let left = radius * radius - used;
            (left >= 0.0).then(|| (center[k] - left.sqrt(), center[k] + left.sqrt()))
        }
        Set::Halfspace { a, b } => {
            let rest = b - lead.iter().zip(a).map(|(v, ai)| v * ai).sum::<f64>();
            let ak = a[k];
            if ak > 0.0 {
                Some((around - REACH, rest / ak))
            } else if ak < 0.0 {
                Some((rest / ak, around + REACH))
            } else {
                (rest >= 0.0).then_some((around - REACH, around + REACH))
            }
        }
        Set::Simplex { .. } => unreachable!("simplex is parametrized separately"),
    }
}

/// The range of the first coordinate over a two-dimensional set.
fn first_range(set: &Set, around: f64) -> (f64, f64) {
    match set {
        Set::Box { lower, upper } => (lower[0], upper[0]),
        Set::Ball { center, radius } => (center[0] - radius, center[0] + radius),
        Set::Halfspace { a, b } if a[1] == 0.0 => {
            if a[0] > 0.0 {
                (around - REACH, b / a[0])
            } else {
                (b / a[0], around + REACH)
            }
        }
        _ => (around - REACH, around + REACH),
    }
}

/// Brute-force `(p_μ(x), V_μ(x))` for `n ≤ 2`.
///
/// The objective is minimized coordinate by coordinate: the partial
/// minimum over the last coordinate is convex in the first, so nested
/// one-dimensional searches over slices of `D` find the global minimizer.
/// The simplex is parametrized instead.
pub fn brute_force(problem: &CompositeProblem, set: &Set, x: &[f64], mu: f64) -> (Vec<f64>, f64) {
    assert!(x.len() <= 2, "brute force is for n ≤ 2");
    let obj = Objective::new(problem, x, mu);
    match (set, x.len()) {
        (Set::Simplex { radius, .. }, 1) => {
            let p = vec![*radius];
            let v = obj.eval(&p);
            (p, v)
        }
        (Set::Simplex { radius, .. }, _) => {
            let r = *radius;
            let (s, v) = minimize_1d(&|s| obj.eval(&[r * s, r * (1.0 - s)]), 0.0, 1.0);
            (vec![r * s, r * (1.0 - s)], v)
        }
        (_, 1) => {
            let (lo, hi) = slice(set, &[], x[0]).expect("empty set");
            let (t, v) = minimize_1d(&|t| obj.eval(&[t]), lo, hi);
            (vec![t], v)
        }
        _ => {
            let inner = |t: f64| -> (f64, f64) {
                match slice(set, &[t], x[1]) {
                    Some((lo, hi)) => minimize_1d(&|u| obj.eval(&[t, u]), lo, hi),
                    None => (f64::NAN, f64::INFINITY),
                }
            };
            let (lo, hi) = first_range(set, x[0]);
            let (t, v) = minimize_1d(&|t| inner(t).1, lo, hi);
            (vec![t, inner(t).0], v)
        }
    }
}

pub struct Instance {
    pub problem: CompositeProblem,
    pub set: Set,
    pub outer: Outer,
    pub x: Vec<f64>,
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

pub fn random_outer(rng: &mut ChaCha8Rng, m: usize, variant: usize) -> Outer {
    match variant % 7 {
        0 => Outer::HalfSquaredL2 { dim: m },
        1 => Outer::L1 { dim: m },
        2 => Outer::L2 { dim: m },
        3 => Outer::LInf { dim: m },
        4 => Outer::CoordinateMax { dim: m },
        5 => Outer::huber(m, uniform(rng, 0.2, 2.0)).unwrap(),
        _ => Outer::Linear { c: (0..m).map(|_| uniform(rng, -1.0, 1.0)).collect() },
    }
}

/// A random set that contains the origin's neighbourhood or is the simplex.
pub fn random_set(rng: &mut ChaCha8Rng, n: usize, variant: usize) -> Set {
    match variant % 5 {
        0 => Set::whole(n),
        1 => {
            let lower: Vec<f64> = (0..n).map(|_| uniform(rng, -1.5, 0.0)).collect();
            let upper: Vec<f64> = lower.iter().map(|l| l + uniform(rng, 0.2, 2.0)).collect();
            Set::boxed(lower, upper).unwrap()
        }
        2 => Set::ball((0..n).map(|_| uniform(rng, -0.5, 0.5)).collect(), uniform(rng, 0.3, 2.0)).unwrap(),
        3 => Set::simplex(n, uniform(rng, 0.5, 2.0)).unwrap(),
        _ => {
            let a: Vec<f64> = (0..n).map(|_| uniform(rng, -1.0, 1.0)).collect();
            let a = if linalg::norm(&a) < 0.1 { vec![1.0; n] } else { a };
            Set::halfspace(a, uniform(rng, -0.5, 0.5)).unwrap()
        }
    }
}

pub fn random_quadratic_map(rng: &mut ChaCha8Rng, n: usize, m: usize) -> QuadraticMap {
    let constants = (0..m).map(|_| uniform(rng, -1.0, 1.0)).collect();
    let linear = Matrix::from_row_major(m, n, (0..m * n).map(|_| uniform(rng, -1.0, 1.0)).collect());
    let hessians = (0..m)
        .map(|_| Matrix::from_row_major(n, n, (0..n * n).map(|_| uniform(rng, -1.0, 1.0)).collect()))
        .collect();
    QuadraticMap::new(constants, linear, hessians)
}

/// Instance `index` of a deterministic family cycling through every outer
/// function and set variant.
pub fn random_instance(seed: u64, index: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let n = 1 + index % 2;
    let m = 1 + (index / 2) % 3;
    let outer = random_outer(&mut rng, m, index / 6);
    let set = random_set(&mut rng, n, index / 42 + index);
    let map = random_quadratic_map(&mut rng, n, m);
    let x: Vec<f64> = (0..n).map(|_| uniform(&mut rng, -1.5, 1.5)).collect();
    let problem = CompositeProblem::new(map, outer.clone(), set.clone()).unwrap();
    Instance { problem, set, outer, x }
}
