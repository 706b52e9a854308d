//! Named benchmark problems.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use compgn_core::linalg::Matrix;
use compgn_core::maps::{CoordinatePower, Identity, QuadraticMap};
use compgn_core::{CompositeProblem, Outer, Set, SmoothMap, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Numeric builder parameters, e.g. `radius=0.8`.
pub type Params = BTreeMap<String, f64>;

fn param(params: &Params, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

/// Solver settings a problem ships with; command-line values override them.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ConfigDefaults {
    pub mu0: Option<f64>,
}

impl ConfigDefaults {
    pub fn apply(&self, mut cfg: SolverConfig) -> SolverConfig {
        if let Some(mu0) = self.mu0 {
            cfg.mu0 = mu0;
        }
        cfg
    }
}

pub struct RegistryEntry {
    pub name: &'static str,
    pub notes: &'static str,
    pub builder: fn(&Params) -> Result<CompositeProblem>,
    pub default_x0: Vec<f64>,
    /// Minimizer and optimal value, when known.
    pub known_optimum: Option<(Vec<f64>, f64)>,
    /// Box that diagnostics sample from (points are projected onto `D`).
    pub sample_lower: Vec<f64>,
    pub sample_upper: Vec<f64>,
    pub config_defaults: ConfigDefaults,
    /// Test fixture rather than a benchmark problem.
    pub fixture: bool,
}

impl RegistryEntry {
    pub fn build(&self, params: &Params) -> Result<CompositeProblem> {
        (self.builder)(params)
    }

    pub fn default_config(&self) -> SolverConfig {
        self.config_defaults.apply(SolverConfig::default())
    }
}

impl std::fmt::Debug for RegistryEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RegistryEntry").field("name", &self.name).finish()
    }
}

/// `F(x) = (1 − x₁, 10(x₂ − x₁²))`
#[derive(Debug, Clone, Copy)]
pub struct RosenbrockResiduals;

impl SmoothMap for RosenbrockResiduals {
    fn input_dim(&self) -> usize {
        2
    }

    fn output_dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        vec![1.0 - x[0], 10.0 * (x[1] - x[0] * x[0])]
    }

    fn jacobian(&self, x: &[f64]) -> Matrix {
        Matrix::from_rows(&[&[-1.0, 0.0], &[-20.0 * x[0], 10.0]])
    }

    fn hessian_vector(&self, _x: &[f64], v: &[f64], d: &[f64]) -> Option<Vec<f64>> {
        Some(vec![-20.0 * v[1] * d[0], 0.0])
    }
}

/// Residuals `a·exp(b·tᵢ) − yᵢ` of an exponential model with parameters `(a, b)`.
#[derive(Debug, Clone)]
pub struct ExponentialResiduals {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
}

impl ExponentialResiduals {
    /// `points` samples of `2·exp(−1.5 t)` on `t ∈ [0, 2]` with uniform
    /// noise in `±0.02` and a `+0.5` outlier at every fifth point. The noise
    /// comes from ChaCha8 seeded with `seed`.
    pub fn synthetic(points: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let denom = (points.max(2) - 1) as f64;
        let t: Vec<f64> = (0..points).map(|i| 2.0 * i as f64 / denom).collect();
        let y = t
            .iter()
            .enumerate()
            .map(|(i, &ti)| {
                let outlier = if i % 5 == 2 { 0.5 } else { 0.0 };
                2.0 * (-1.5 * ti).exp() + rng.gen_range(-0.02..0.02) + outlier
            })
            .collect();
        Self { t, y }
    }
}

impl SmoothMap for ExponentialResiduals {
    fn input_dim(&self) -> usize {
        2
    }

    fn output_dim(&self) -> usize {
        self.t.len()
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        self.t.iter().zip(&self.y).map(|(t, y)| x[0] * (x[1] * t).exp() - y).collect()
    }

    fn jacobian(&self, x: &[f64]) -> Matrix {
        let mut j = Matrix::zeros(self.t.len(), 2);
        for (i, t) in self.t.iter().enumerate() {
            let e = (x[1] * t).exp();
            j[(i, 0)] = e;
            j[(i, 1)] = x[0] * t * e;
        }
        j
    }

    fn hessian_vector(&self, x: &[f64], v: &[f64], d: &[f64]) -> Option<Vec<f64>> {
        let mut out = vec![0.0; 2];
        for (t, vi) in self.t.iter().zip(v) {
            let e = (x[1] * t).exp();
            // ∇² = [[0, t e], [t e, a t² e]]
            out[0] += vi * t * e * d[1];
            out[1] += vi * (t * e * d[0] + x[0] * t * t * e * d[1]);
        }
        Some(out)
    }
}

/// `F(x) = (x₁ − 2, x₂ − 2, 2(x₁x₂ − 1))`
#[derive(Debug, Clone, Copy)]
pub struct BilinearResiduals;

impl SmoothMap for BilinearResiduals {
    fn input_dim(&self) -> usize {
        2
    }

    fn output_dim(&self) -> usize {
        3
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0] - 2.0, x[1] - 2.0, 2.0 * (x[0] * x[1] - 1.0)]
    }

    fn jacobian(&self, x: &[f64]) -> Matrix {
        Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[2.0 * x[1], 2.0 * x[0]]])
    }

    fn hessian_vector(&self, _x: &[f64], v: &[f64], d: &[f64]) -> Option<Vec<f64>> {
        Some(vec![2.0 * v[2] * d[1], 2.0 * v[2] * d[0]])
    }
}

/// Wraps a map and scales its Jacobian by `1 + fraction`, leaving values
/// untouched. Used as a negative control for the derivative checks.
pub struct CorruptedJacobian {
    pub inner: Box<dyn SmoothMap>,
    pub fraction: f64,
}

impl SmoothMap for CorruptedJacobian {
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    fn output_dim(&self) -> usize {
        self.inner.output_dim()
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        self.inner.value(x)
    }

    fn jacobian(&self, x: &[f64]) -> Matrix {
        let j = self.inner.jacobian(x);
        let data = j.as_slice().iter().map(|v| v * (1.0 + self.fraction)).collect();
        Matrix::from_row_major(j.rows(), j.cols(), data)
    }

    fn hessian_vector(&self, x: &[f64], v: &[f64], d: &[f64]) -> Option<Vec<f64>> {
        self.inner.hessian_vector(x, v, d)
    }
}

/// Builds the entry's problem with its Jacobian oracle scaled by `1 + fraction`.
pub fn build_with_corrupted_jacobian(entry: &RegistryEntry, params: &Params, fraction: f64) -> Result<CompositeProblem> {
    let source = entry.build(params)?;
    let map: Box<dyn SmoothMap> = Box::new(CorruptedJacobian { inner: Box::new(MapOf(source)), fraction });
    Ok(entry.build(params)?.with_map(map)?)
}

/// Exposes the smooth map of an owned problem.
struct MapOf(CompositeProblem);

impl SmoothMap for MapOf {
    fn input_dim(&self) -> usize {
        self.0.n()
    }

    fn output_dim(&self) -> usize {
        self.0.m()
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        self.0.map().value(x)
    }

    fn jacobian(&self, x: &[f64]) -> Matrix {
        self.0.map().jacobian(x)
    }

    fn hessian_vector(&self, x: &[f64], v: &[f64], d: &[f64]) -> Option<Vec<f64>> {
        self.0.map().hessian_vector(x, v, d)
    }
}

fn rosenbrock_ls(_: &Params) -> Result<CompositeProblem> {
    Ok(CompositeProblem::new(RosenbrockResiduals, Outer::HalfSquaredL2 { dim: 2 }, Set::whole(2))?)
}

/// Default seed of the synthetic exponential dataset.
pub const EXP_FIT_DATA_SEED: u64 = 20_170_321;

fn l1_exp_fit(params: &Params) -> Result<CompositeProblem> {
    let points = param(params, "points", 20.0);
    if !(points >= 2.0 && points.fract() == 0.0) {
        bail!("l1-exp-fit needs an integer points >= 2");
    }
    let seed = param(params, "data-seed", EXP_FIT_DATA_SEED as f64) as u64;
    let map = ExponentialResiduals::synthetic(points as usize, seed);
    let m = map.output_dim();
    let set = Set::boxed(vec![0.1, -5.0], vec![10.0, 1.0])?;
    Ok(CompositeProblem::new(map, Outer::L1 { dim: m }, set)?)
}

fn minimax_quad(_: &Params) -> Result<CompositeProblem> {
    let diag = |a: f64, b: f64| Matrix::from_rows(&[&[a, 0.0], &[0.0, b]]);
    let map = QuadraticMap::new(
        vec![1.0; 4],
        Matrix::from_rows(&[&[-2.0, 0.0], &[2.0, 0.0], &[0.0, -2.0], &[0.0, 2.0]]),
        vec![diag(2.0, 2.0), diag(2.0, 2.0), diag(4.0, 2.0), diag(2.0, 6.0)],
    );
    Ok(CompositeProblem::new(map, Outer::CoordinateMax { dim: 4 }, Set::whole(2))?)
}

fn box_quartic(_: &Params) -> Result<CompositeProblem> {
    let set = Set::boxed(vec![0.5, -2.0, -1.0], vec![2.0, -0.25, 1.0])?;
    Ok(CompositeProblem::new(CoordinatePower::new(3, 4), Outer::Linear { c: vec![1.0, 2.0, -0.5] }, set)?)
}

fn ball_constrained_ls(params: &Params) -> Result<CompositeProblem> {
    let radius = param(params, "radius", 1.0);
    Ok(CompositeProblem::new(BilinearResiduals, Outer::HalfSquaredL2 { dim: 3 }, Set::ball(vec![0.0, 0.0], radius)?)?)
}

fn linear_unbounded(_: &Params) -> Result<CompositeProblem> {
    Ok(CompositeProblem::new(Identity::new(1), Outer::Linear { c: vec![1.0] }, Set::whole(1))?)
}

/// All registered problems, benchmark problems first.
pub fn registry() -> Vec<RegistryEntry> {
    vec![
        RegistryEntry {
            name: "rosenbrock-ls",
            notes: "g = half-squared-l2, F = Rosenbrock residuals (1 - x1, 10(x2 - x1^2)), D = R^2; minimum 0 at (1, 1)",
            builder: rosenbrock_ls,
            default_x0: vec![-1.2, 1.0],
            known_optimum: Some((vec![1.0, 1.0], 0.0)),
            sample_lower: vec![-2.0, -1.0],
            sample_upper: vec![2.0, 3.0],
            config_defaults: ConfigDefaults::default(),
            fixture: false,
        },
        RegistryEntry {
            name: "l1-exp-fit",
            notes: "g = l1, F = residuals a*exp(b*t_i) - y_i of 20 synthetic points (2*exp(-1.5t) on [0,2], \
                    uniform noise +-0.02, +0.5 outlier at every fifth point, ChaCha8 seed 20170321), \
                    D = box [0.1,10] x [-5,1]; params: points, data-seed",
            builder: l1_exp_fit,
            default_x0: vec![1.0, 0.0],
            known_optimum: None,
            sample_lower: vec![0.5, -3.0],
            sample_upper: vec![4.0, 0.5],
            config_defaults: ConfigDefaults::default(),
            fixture: false,
        },
        RegistryEntry {
            name: "minimax-quad",
            notes: "g = coordinate-max of four convex quadratics in R^2, D = R^2; minimum 1 at (0, 0)",
            builder: minimax_quad,
            default_x0: vec![2.0, 3.0],
            known_optimum: Some((vec![0.0, 0.0], 1.0)),
            sample_lower: vec![-2.0, -2.0],
            sample_upper: vec![2.0, 2.0],
            config_defaults: ConfigDefaults::default(),
            fixture: false,
        },
        RegistryEntry {
            name: "box-quartic",
            notes: "g = linear c = (1, 2, -0.5), F(x) = x^4 coordinatewise, D = box [0.5,2] x [-2,-0.25] x [-1,1]; \
                    minimum -0.4296875 at (0.5, -0.25, 1)",
            builder: box_quartic,
            default_x0: vec![1.5, -1.5, 0.3],
            known_optimum: Some((vec![0.5, -0.25, 1.0], -0.4296875)),
            sample_lower: vec![0.5, -2.0, -1.0],
            sample_upper: vec![2.0, -0.25, 1.0],
            config_defaults: ConfigDefaults::default(),
            fixture: false,
        },
        RegistryEntry {
            name: "ball-constrained-ls",
            notes: "g = half-squared-l2, F(x) = (x1 - 2, x2 - 2, 2(x1 x2 - 1)), D = euclidean ball of radius 1 \
                    (param radius) at the origin",
            builder: ball_constrained_ls,
            default_x0: vec![-0.5, 0.2],
            known_optimum: None,
            sample_lower: vec![-1.0, -1.0],
            sample_upper: vec![1.0, 1.0],
            config_defaults: ConfigDefaults::default(),
            fixture: false,
        },
        RegistryEntry {
            name: "linear-unbounded",
            notes: "fixture: g(z) = z, F = identity, D = R; unbounded below. Ships with mu0 = 1e-8 so the \
                    iterates cross the divergence bound within 100 iterations",
            builder: linear_unbounded,
            default_x0: vec![0.0],
            known_optimum: None,
            sample_lower: vec![-5.0],
            sample_upper: vec![5.0],
            config_defaults: ConfigDefaults { mu0: Some(1e-8) },
            fixture: true,
        },
    ]
}

pub fn find(name: &str) -> Option<RegistryEntry> {
    registry().into_iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use compgn_core::diagnostics::{fd_jacobian, relative_deviation};

    #[test]
    fn names_are_unique() {
        let names: Vec<_> = registry().iter().map(|e| e.name).collect();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(names.len(), sorted.len());
    }

    #[test]
    fn objectives_at_known_points() {
        let p = find("rosenbrock-ls").unwrap().build(&Params::new()).unwrap();
        assert_eq!(p.objective(&[1.0, 1.0]).unwrap(), 0.0);
        let p = find("minimax-quad").unwrap().build(&Params::new()).unwrap();
        assert_eq!(p.objective(&[0.0, 0.0]).unwrap(), 1.0);
        let p = find("box-quartic").unwrap().build(&Params::new()).unwrap();
        assert_eq!(p.objective(&[0.5, -0.25, 1.0]).unwrap(), -0.4296875);
    }

    #[test]
    fn synthetic_data_is_reproducible() {
        let a = ExponentialResiduals::synthetic(20, 5);
        let b = ExponentialResiduals::synthetic(20, 5);
        assert_eq!(a.y, b.y);
        assert_ne!(a.y, ExponentialResiduals::synthetic(20, 6).y);
    }

    #[test]
    fn hessian_vector_products_match_differences() {
        let maps: Vec<Box<dyn SmoothMap>> = vec![
            Box::new(RosenbrockResiduals),
            Box::new(ExponentialResiduals::synthetic(7, 1)),
            Box::new(BilinearResiduals),
        ];
        let x = [0.8, -0.6];
        let d = [0.3, 1.1];
        for map in maps {
            let v: Vec<f64> = (0..map.output_dim()).map(|i| 1.0 - 0.3 * i as f64).collect();
            let h = 1e-6;
            let xp = [x[0] + h * d[0], x[1] + h * d[1]];
            let xm = [x[0] - h * d[0], x[1] - h * d[1]];
            let fd: Vec<f64> = map
                .jacobian(&xp)
                .tr_mul_vec(&v)
                .iter()
                .zip(map.jacobian(&xm).tr_mul_vec(&v))
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect();
            let hv = map.hessian_vector(&x, &v, &d).unwrap();
            assert!(relative_deviation(&hv, &fd) < 1e-7, "{hv:?} vs {fd:?}");
            assert!(relative_deviation(map.jacobian(&x).as_slice(), fd_jacobian(map.as_ref(), &x).as_slice()) < 1e-8);
        }
    }

    #[test]
    fn corrupted_jacobian_is_scaled() {
        let entry = find("minimax-quad").unwrap();
        let params = Params::new();
        let p = build_with_corrupted_jacobian(&entry, &params, 0.01).unwrap();
        let clean = entry.build(&params).unwrap();
        let x = [0.4, -0.2];
        assert_eq!(p.map().value(&x), clean.map().value(&x));
        let (a, b) = (p.map().jacobian(&x), clean.map().jacobian(&x));
        assert!((a[(0, 0)] - 1.01 * b[(0, 0)]).abs() < 1e-15);
    }

    #[test]
    fn bad_params_are_rejected() {
        let mut params = Params::new();
        params.insert("points".into(), 1.0);
        assert!(find("l1-exp-fit").unwrap().build(&params).is_err());
        let mut params = Params::new();
        params.insert("radius".into(), -1.0);
        assert!(find("ball-constrained-ls").unwrap().build(&params).is_err());
    }
}
