//! Built-in outer functions `g` and feasible sets `D`.
//!
//! Every prox and projection here is an exact closed form, except the
//! simplex (and l1-ball) projection, which uses the finite sorting algorithm.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::problem::{FeasibleSet, OuterConvex};

/// Catalog of convex, finite-valued outer functions.
#[derive(Debug, Clone, PartialEq)]
pub enum Outer {
    /// `½‖z‖²`
    HalfSquaredL2 { dim: usize },
    /// `‖z‖₁`
    L1 { dim: usize },
    /// `‖z‖₂`
    L2 { dim: usize },
    /// `‖z‖∞`
    LInf { dim: usize },
    /// `maxᵢ zᵢ`
    CoordinateMax { dim: usize },
    /// `Σᵢ huber_δ(zᵢ)` with `huber_δ(s) = s²/2` for `|s| ≤ δ`, else `δ(|s| − δ/2)`.
    Huber { dim: usize, delta: f64 },
    /// `⟨c, z⟩`
    Linear { c: Vec<f64> },
}

impl Outer {
    /// Huber with the given threshold (`delta > 0`).
    pub fn huber(dim: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("huber delta must be positive, got {delta}")));
        }
        Ok(Outer::Huber { dim, delta })
    }

    /// Huber with the default threshold 1.
    pub fn huber_default(dim: usize) -> Self {
        Outer::Huber { dim, delta: 1.0 }
    }

    /// `prox_{s g*}(z)`, the prox of the Fenchel conjugate.
    pub fn conjugate_prox(&self, z: &[f64], s: f64) -> Result<Vec<f64>> {
        check_dim("outer argument", self.dim(), z.len())?;
        positive_step(s)?;
        Ok(match self {
            Outer::HalfSquaredL2 { .. } => z.iter().map(|v| v / (1.0 + s)).collect(),
            Outer::L1 { .. } => z.iter().map(|v| v.clamp(-1.0, 1.0)).collect(),
            Outer::L2 { .. } => project_ball(z, 1.0),
            Outer::LInf { .. } => project_l1_ball(z, 1.0),
            Outer::CoordinateMax { .. } => project_simplex(z, 1.0),
            Outer::Huber { delta, .. } => z.iter().map(|v| (v / (1.0 + s)).clamp(-delta, *delta)).collect(),
            Outer::Linear { c } => c.clone(),
        })
    }
}

fn positive_step(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("prox step must be positive, got {t}")))
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// First index attaining the maximum of `key`.
fn first_argmax(z: &[f64], key: impl Fn(f64) -> f64) -> usize {
    let mut best = 0;
    for i in 1..z.len() {
        if key(z[i]) > key(z[best]) {
            best = i;
        }
    }
    best
}

impl OuterConvex for Outer {
    fn dim(&self) -> usize {
        match self {
            Outer::HalfSquaredL2 { dim }
            | Outer::L1 { dim }
            | Outer::L2 { dim }
            | Outer::LInf { dim }
            | Outer::CoordinateMax { dim }
            | Outer::Huber { dim, .. } => *dim,
            Outer::Linear { c } => c.len(),
        }
    }

    fn value(&self, z: &[f64]) -> f64 {
        match self {
            Outer::HalfSquaredL2 { .. } => 0.5 * linalg::dot(z, z),
            Outer::L1 { .. } => z.iter().map(|v| v.abs()).sum(),
            Outer::L2 { .. } => linalg::norm(z),
            Outer::LInf { .. } => z.iter().fold(0.0, |m, v| m.max(v.abs())),
            Outer::CoordinateMax { .. } => z.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Outer::Huber { delta, .. } => z
                .iter()
                .map(|v| {
                    let a = v.abs();
                    if a <= *delta {
                        0.5 * v * v
                    } else {
                        delta * (a - 0.5 * delta)
                    }
                })
                .sum(),
            Outer::Linear { c } => linalg::dot(c, z),
        }
    }

    fn subgradient(&self, z: &[f64]) -> Vec<f64> {
        match self {
            Outer::HalfSquaredL2 { .. } => z.to_vec(),
            Outer::L1 { .. } => z.iter().map(|&v| sign(v)).collect(),
            Outer::L2 { .. } => {
                let n = linalg::norm(z);
                if n == 0.0 {
                    alloc::vec![0.0; z.len()]
                } else {
                    z.iter().map(|v| v / n).collect()
                }
            }
            Outer::LInf { .. } => {
                let mut out = alloc::vec![0.0; z.len()];
                if !z.is_empty() {
                    let i = first_argmax(z, f64::abs);
                    out[i] = sign(z[i]);
                }
                out
            }
            Outer::CoordinateMax { .. } => {
                let mut out = alloc::vec![0.0; z.len()];
                if !z.is_empty() {
                    out[first_argmax(z, |v| v)] = 1.0;
                }
                out
            }
            Outer::Huber { delta, .. } => z.iter().map(|v| v.clamp(-delta, *delta)).collect(),
            Outer::Linear { c } => c.clone(),
        }
    }

    fn prox(&self, z: &[f64], t: f64) -> Result<Vec<f64>> {
        check_dim("outer argument", self.dim(), z.len())?;
        positive_step(t)?;
        Ok(match self {
            Outer::HalfSquaredL2 { .. } => z.iter().map(|v| v / (1.0 + t)).collect(),
            Outer::L1 { .. } => z.iter().map(|&v| sign(v) * (v.abs() - t).max(0.0)).collect(),
            Outer::L2 { .. } => {
                let n = linalg::norm(z);
                if n <= t {
                    alloc::vec![0.0; z.len()]
                } else {
                    z.iter().map(|v| v * (1.0 - t / n)).collect()
                }
            }
            // Moreau: prox_{t g}(z) = z − t Π_{dom g*}(z / t) for norms and max.
            Outer::LInf { .. } => moreau_with_projection(z, t, |w| project_l1_ball(w, 1.0)),
            Outer::CoordinateMax { .. } => moreau_with_projection(z, t, |w| project_simplex(w, 1.0)),
            Outer::Huber { delta, .. } => z
                .iter()
                .map(|&v| {
                    if v.abs() <= delta * (1.0 + t) {
                        v / (1.0 + t)
                    } else {
                        v - t * delta * sign(v)
                    }
                })
                .collect(),
            Outer::Linear { c } => z.iter().zip(c).map(|(v, ci)| v - t * ci).collect(),
        })
    }

    fn conjugate_prox(&self, z: &[f64], s: f64) -> Result<Vec<f64>> {
        Outer::conjugate_prox(self, z, s)
    }
}

fn moreau_with_projection(z: &[f64], t: f64, project: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let scaled: Vec<f64> = z.iter().map(|v| v / t).collect();
    let p = project(&scaled);
    z.iter().zip(&p).map(|(v, pi)| v - t * pi).collect()
}

/// Projection onto `{x ≥ 0, Σ xᵢ = radius}` by the sorting algorithm.
/// Ties in the sort are broken by index.
pub fn project_simplex(x: &[f64], radius: f64) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    // The projection commutes with shifts along (1, …, 1); shifting by the
    // max keeps huge inputs from cancelling against the radius.
    let top = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let x: Vec<f64> = x.iter().map(|v| v - top).collect();
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].partial_cmp(&x[a]).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut cumsum = x[order[0]];
    let mut theta = cumsum - radius;
    for (j, &i) in order.iter().enumerate().skip(1) {
        cumsum += x[i];
        let candidate = (cumsum - radius) / (j + 1) as f64;
        if x[i] - candidate > 0.0 {
            theta = candidate;
        }
    }
    x.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Projection onto `{‖x‖₁ ≤ radius}`.
pub fn project_l1_ball(x: &[f64], radius: f64) -> Vec<f64> {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    if l1 <= radius {
        return x.to_vec();
    }
    let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    project_simplex(&abs, radius)
        .into_iter()
        .zip(x)
        .map(|(a, v)| a * sign(*v))
        .collect()
}

fn project_ball(x: &[f64], radius: f64) -> Vec<f64> {
    let n = linalg::norm(x);
    if n <= radius {
        x.to_vec()
    } else {
        x.iter().map(|v| v * (radius / n)).collect()
    }
}

/// Catalog of closed convex sets.
#[derive(Debug, Clone, PartialEq)]
pub enum Set {
    /// All of Rⁿ.
    Whole { dim: usize },
    /// `lower ≤ x ≤ upper`; bounds may be infinite.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `‖x − center‖ ≤ radius`
    Ball { center: Vec<f64>, radius: f64 },
    /// `x ≥ 0, Σ xᵢ = radius`
    Simplex { dim: usize, radius: f64 },
    /// `⟨a, x⟩ ≤ b`
    Halfspace { a: Vec<f64>, b: f64 },
}

impl Set {
    pub fn whole(dim: usize) -> Self {
        Set::Whole { dim }
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim("box upper bound", lower.len(), upper.len())?;
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidArgument("box requires lower ≤ upper".into()));
        }
        Ok(Set::Box { lower, upper })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!("ball needs finite center and radius > 0, got {radius}")));
        }
        Ok(Set::Ball { center, radius })
    }

    pub fn simplex(dim: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || dim == 0 {
            return Err(Error::InvalidArgument(format!("simplex needs dim > 0 and radius > 0, got {radius}")));
        }
        Ok(Set::Simplex { dim, radius })
    }

    pub fn halfspace(a: Vec<f64>, b: f64) -> Result<Self> {
        if linalg::norm(&a) == 0.0 || !b.is_finite() {
            return Err(Error::InvalidArgument("halfspace normal must be nonzero".into()));
        }
        Ok(Set::Halfspace { a, b })
    }
}

impl FeasibleSet for Set {
    fn dim(&self) -> usize {
        match self {
            Set::Whole { dim } | Set::Simplex { dim, .. } => *dim,
            Set::Box { lower, .. } => lower.len(),
            Set::Ball { center, .. } => center.len(),
            Set::Halfspace { a, .. } => a.len(),
        }
    }

    fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Set::Whole { .. } => x.to_vec(),
            Set::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| v.max(*l).min(*u))
                .collect(),
            Set::Ball { center, radius } => {
                let d = linalg::dist(x, center);
                if d <= *radius {
                    return x.to_vec();
                }
                let mut factor = radius / d;
                // Rounding can leave the scaled point a hair outside; shrink
                // until it is inside so that projecting again is a no-op.
                loop {
                    let y: Vec<f64> = x.iter().zip(center).map(|(v, c)| c + (v - c) * factor).collect();
                    if linalg::dist(&y, center) <= *radius {
                        return y;
                    }
                    factor *= 1.0 - f64::EPSILON;
                }
            }
            Set::Simplex { radius, .. } => {
                if self.contains(x, simplex_slack(x.len(), *radius)) && x.iter().all(|v| *v >= 0.0) {
                    return x.to_vec();
                }
                project_simplex(x, *radius)
            }
            Set::Halfspace { a, b } => {
                let a2 = linalg::dot(a, a);
                let mut y = x.to_vec();
                let mut extra = 0.0;
                loop {
                    let excess = linalg::dot(a, &y) - b;
                    if excess <= 0.0 {
                        return y;
                    }
                    linalg::axpy(-(excess + extra) / a2, a, &mut y);
                    extra = if extra == 0.0 { f64::EPSILON * (1.0 + b.abs()) } else { 2.0 * extra };
                }
            }
        }
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Set::Whole { .. } => true,
            Set::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            Set::Ball { center, radius } => linalg::dist(x, center) <= radius + tol,
            Set::Simplex { radius, .. } => {
                x.iter().all(|v| *v >= -tol) && (x.iter().sum::<f64>() - radius).abs() <= tol
            }
            Set::Halfspace { a, b } => (linalg::dot(a, x) - b) / linalg::norm(a) <= tol,
        }
    }
}

fn simplex_slack(n: usize, radius: f64) -> f64 {
    4.0 * n as f64 * f64::EPSILON * radius.max(1.0)
}
