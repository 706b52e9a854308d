//! Oracle contracts for the composite model `min_{x ∈ D} g(F(x))`.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{check_dim, Result};
use crate::linalg::{self, Matrix};

/// A C² map `F : Rⁿ → Rᵐ`.
///
/// Implementations must be deterministic: equal inputs give bitwise-equal
/// outputs, and evaluation must not mutate shared state.
pub trait SmoothMap: Send + Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Vec<f64>;
    /// The m×n Jacobian.
    fn jacobian(&self, x: &[f64]) -> Matrix;
    /// `(Σᵢ vᵢ ∇²fᵢ(x)) d`, if the map can provide it.
    fn hessian_vector(&self, _x: &[f64], _v: &[f64], _d: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// A convex, finite-valued `g : Rᵐ → R`.
pub trait OuterConvex: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, z: &[f64]) -> f64;
    /// One deterministic element of `∂g(z)`.
    fn subgradient(&self, z: &[f64]) -> Vec<f64>;
    /// `argmin_w g(w) + ‖w − z‖² / (2t)`; `t` must be positive.
    fn prox(&self, z: &[f64], t: f64) -> Result<Vec<f64>>;
    /// `prox_{s g*}(z)` for the Fenchel conjugate `g*`. The default goes
    /// through the Moreau identity, which cancels badly for very large `s`.
    fn conjugate_prox(&self, z: &[f64], s: f64) -> Result<Vec<f64>> {
        let w: Vec<f64> = z.iter().map(|v| v / s).collect();
        let p = self.prox(&w, 1.0 / s)?;
        Ok(z.iter().zip(&p).map(|(zi, pi)| zi - s * pi).collect())
    }
}

/// A closed convex `D ⊂ Rⁿ`.
pub trait FeasibleSet: Send + Sync {
    fn dim(&self) -> usize;
    /// Euclidean projection onto the set.
    fn project(&self, x: &[f64]) -> Vec<f64>;
    fn contains(&self, x: &[f64], tol: f64) -> bool;
}

/// One instance of `min_{x ∈ D} g(F(x))`.
pub struct CompositeProblem {
    map: Box<dyn SmoothMap>,
    outer: Box<dyn OuterConvex>,
    set: Box<dyn FeasibleSet>,
}

impl core::fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("n", &self.n())
            .field("m", &self.m())
            .finish()
    }
}

impl CompositeProblem {
    pub fn new(
        map: impl SmoothMap + 'static,
        outer: impl OuterConvex + 'static,
        set: impl FeasibleSet + 'static,
    ) -> Result<Self> {
        Self::from_boxed(Box::new(map), Box::new(outer), Box::new(set))
    }

    pub fn from_boxed(
        map: Box<dyn SmoothMap>,
        outer: Box<dyn OuterConvex>,
        set: Box<dyn FeasibleSet>,
    ) -> Result<Self> {
        check_dim("outer function input", map.output_dim(), outer.dim())?;
        check_dim("feasible set", map.input_dim(), set.dim())?;
        Ok(Self { map, outer, set })
    }

    /// Swaps the smooth map, keeping `g` and `D`.
    pub fn with_map(self, map: Box<dyn SmoothMap>) -> Result<Self> {
        Self::from_boxed(map, self.outer, self.set)
    }

    pub fn n(&self) -> usize {
        self.map.input_dim()
    }

    pub fn m(&self) -> usize {
        self.map.output_dim()
    }

    pub fn map(&self) -> &dyn SmoothMap {
        self.map.as_ref()
    }

    pub fn outer(&self) -> &dyn OuterConvex {
        self.outer.as_ref()
    }

    pub fn set(&self) -> &dyn FeasibleSet {
        self.set.as_ref()
    }

    /// `g(F(x))`. Feasibility of `x` is not checked.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        check_dim("point", self.n(), x.len())?;
        Ok(self.outer.value(&self.map.value(x)))
    }

    /// The partial linearization `h(x, y) = g(F(x) + ∇F(x)(y − x))`.
    pub fn model_h(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim("point x", self.n(), x.len())?;
        check_dim("point y", self.n(), y.len())?;
        let fx = self.map.value(x);
        let jac = self.map.jacobian(x);
        Ok(self.outer.value(&linearize(&fx, &jac, x, y)))
    }

    /// `(Σᵢ vᵢ ∇²fᵢ(x)) d` from the oracle, or by central differences of
    /// `x ↦ ∇F(x)ᵀv` along `d` with step `1e-5 (1 + ‖x‖)` when the oracle
    /// is absent.
    pub fn hessian_vector(&self, x: &[f64], v: &[f64], d: &[f64]) -> Vec<f64> {
        if let Some(hv) = self.map.hessian_vector(x, v, d) {
            return hv;
        }
        let dn = linalg::norm(d);
        if dn == 0.0 {
            return alloc::vec![0.0; x.len()];
        }
        let h = 1e-5 * (1.0 + linalg::norm(x));
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        linalg::axpy(h / dn, d, &mut xp);
        linalg::axpy(-h / dn, d, &mut xm);
        let gp = self.map.jacobian(&xp).tr_mul_vec(v);
        let gm = self.map.jacobian(&xm).tr_mul_vec(v);
        gp.iter()
            .zip(&gm)
            .map(|(a, b)| (a - b) / (2.0 * h) * dn)
            .collect()
    }
}

/// `F(x) + ∇F(x)(y − x)`
pub(crate) fn linearize(fx: &[f64], jac: &Matrix, x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut z = jac.mul_vec(&linalg::sub(y, x));
    linalg::axpy(1.0, fx, &mut z);
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{Outer, Set};
    use crate::maps::{CoordinatePower, Identity};
    use alloc::vec;

    #[test]
    fn objective_of_identity_half_squared() {
        let p = CompositeProblem::new(Identity::new(2), Outer::HalfSquaredL2 { dim: 2 }, Set::whole(2))
            .unwrap();
        assert_eq!(p.objective(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(p.objective(&[3.0, 4.0]).unwrap(), 12.5);
    }

    #[test]
    fn objective_rejects_wrong_dimension() {
        let p = CompositeProblem::new(Identity::new(2), Outer::L1 { dim: 2 }, Set::whole(2)).unwrap();
        assert!(p.objective(&[1.0]).is_err());
        assert!(p.model_h(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn construction_checks_dimensions() {
        assert!(CompositeProblem::new(Identity::new(2), Outer::L1 { dim: 3 }, Set::whole(2)).is_err());
        assert!(CompositeProblem::new(Identity::new(2), Outer::L1 { dim: 2 }, Set::whole(3)).is_err());
    }

    #[test]
    fn model_of_squared_map_under_abs() {
        // F(x) = x², g = |·|, x = 1, y = 2: |1 + 2·1·(2 − 1)| = 3
        let p = CompositeProblem::new(CoordinatePower::new(1, 2), Outer::L1 { dim: 1 }, Set::whole(1))
            .unwrap();
        assert_eq!(p.model_h(&[1.0], &[2.0]).unwrap(), 3.0);
        assert_eq!(p.model_h(&[1.5], &[1.5]).unwrap(), p.objective(&[1.5]).unwrap());
    }

    #[test]
    fn model_is_exact_for_identity() {
        let p = CompositeProblem::new(Identity::new(2), Outer::LInf { dim: 2 }, Set::whole(2)).unwrap();
        for x in [[0.0, 0.0], [5.0, -1.0], [-3.0, 2.5]] {
            assert_eq!(p.model_h(&x, &[1.0, -7.0]).unwrap(), 7.0);
        }
    }

    #[test]
    fn hessian_vector_fallback_matches_exact() {
        let exact = CoordinatePower::new(2, 4);
        let x = [0.7, -1.3];
        let v = [0.5, 2.0];
        let d = [1.0, -0.25];
        let want = exact.hessian_vector(&x, &v, &d).unwrap();
        struct NoHess(CoordinatePower);
        impl SmoothMap for NoHess {
            fn input_dim(&self) -> usize {
                self.0.input_dim()
            }
            fn output_dim(&self) -> usize {
                self.0.output_dim()
            }
            fn value(&self, x: &[f64]) -> Vec<f64> {
                self.0.value(x)
            }
            fn jacobian(&self, x: &[f64]) -> Matrix {
                self.0.jacobian(x)
            }
        }
        let p = CompositeProblem::new(NoHess(exact), Outer::L1 { dim: 2 }, Set::whole(2)).unwrap();
        let got = p.hessian_vector(&x, &v, &d);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()), "{a} vs {b}");
        }
        assert_eq!(p.hessian_vector(&x, &v, &[0.0, 0.0]), vec![0.0, 0.0]);
    }
}
