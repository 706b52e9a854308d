//! A few reusable smooth maps.

use alloc::vec::Vec;

use crate::linalg::{self, Matrix};
use crate::problem::SmoothMap;

/// `F(x) = x` on Rⁿ.
#[derive(Debug, Clone, Copy)]
pub struct Identity {
    dim: usize,
}

impl Identity {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl SmoothMap for Identity {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn output_dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    fn jacobian(&self, _x: &[f64]) -> Matrix {
        Matrix::identity(self.dim)
    }

    fn hessian_vector(&self, _x: &[f64], _v: &[f64], _d: &[f64]) -> Option<Vec<f64>> {
        Some(alloc::vec![0.0; self.dim])
    }
}

/// Coordinatewise power `F(x)ᵢ = xᵢᵖ`.
#[derive(Debug, Clone, Copy)]
pub struct CoordinatePower {
    dim: usize,
    power: i32,
}

impl CoordinatePower {
    pub fn new(dim: usize, power: i32) -> Self {
        Self { dim, power }
    }
}

fn powi(x: f64, p: i32) -> f64 {
    match p {
        0 => 1.0,
        p if p < 0 => 1.0 / powi(x, -p),
        p => (0..p).fold(1.0, |acc, _| acc * x),
    }
}

impl SmoothMap for CoordinatePower {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn output_dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&xi| powi(xi, self.power)).collect()
    }

    fn jacobian(&self, x: &[f64]) -> Matrix {
        let p = self.power;
        let mut j = Matrix::zeros(self.dim, self.dim);
        for (i, &xi) in x.iter().enumerate() {
            j[(i, i)] = p as f64 * powi(xi, p - 1);
        }
        j
    }

    fn hessian_vector(&self, x: &[f64], v: &[f64], d: &[f64]) -> Option<Vec<f64>> {
        let p = self.power as f64;
        Some(
            x.iter()
                .zip(v)
                .zip(d)
                .map(|((&xi, &vi), &di)| vi * p * (p - 1.0) * powi(xi, self.power - 2) * di)
                .collect(),
        )
    }
}

/// `F(x)ᵢ = cᵢ + bᵢᵀx + ½ xᵀAᵢx` with symmetric `Aᵢ`.
#[derive(Debug, Clone)]
pub struct QuadraticMap {
    constants: Vec<f64>,
    linear: Matrix,
    hessians: Vec<Matrix>,
}

impl QuadraticMap {
    /// `linear` is m×n with row `i` equal to `bᵢ`; each hessian is n×n and
    /// is symmetrized on construction.
    pub fn new(constants: Vec<f64>, linear: Matrix, hessians: Vec<Matrix>) -> Self {
        let m = constants.len();
        let n = linear.cols();
        assert_eq!(linear.rows(), m, "linear part must have one row per output");
        assert_eq!(hessians.len(), m, "one hessian per output");
        let hessians = hessians
            .into_iter()
            .map(|a| {
                assert!(a.rows() == n && a.cols() == n, "hessian must be n×n");
                let mut s = Matrix::zeros(n, n);
                for r in 0..n {
                    for c in 0..n {
                        s[(r, c)] = 0.5 * (a[(r, c)] + a[(c, r)]);
                    }
                }
                s
            })
            .collect();
        Self { constants, linear, hessians }
    }
}

impl SmoothMap for QuadraticMap {
    fn input_dim(&self) -> usize {
        self.linear.cols()
    }

    fn output_dim(&self) -> usize {
        self.constants.len()
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        self.constants
            .iter()
            .zip(&self.hessians)
            .enumerate()
            .map(|(i, (&c, a))| c + linalg::dot(self.linear.row(i), x) + 0.5 * linalg::dot(x, &a.mul_vec(x)))
            .collect()
    }

    fn jacobian(&self, x: &[f64]) -> Matrix {
        let (m, n) = (self.output_dim(), self.input_dim());
        let mut j = Matrix::zeros(m, n);
        for (i, a) in self.hessians.iter().enumerate() {
            let ax = a.mul_vec(x);
            for c in 0..n {
                j[(i, c)] = self.linear[(i, c)] + ax[c];
            }
        }
        j
    }

    fn hessian_vector(&self, _x: &[f64], v: &[f64], d: &[f64]) -> Option<Vec<f64>> {
        let mut out = alloc::vec![0.0; self.input_dim()];
        for (a, &vi) in self.hessians.iter().zip(v) {
            linalg::axpy(vi, &a.mul_vec(d), &mut out);
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_jacobian_matches_differences() {
        let q = QuadraticMap::new(
            alloc::vec![1.0, -2.0],
            Matrix::from_rows(&[&[1.0, 0.5], &[0.0, -1.0]]),
            alloc::vec![
                Matrix::from_rows(&[&[2.0, 1.0], &[0.0, 4.0]]),
                Matrix::from_rows(&[&[-1.0, 0.0], &[0.0, 3.0]]),
            ],
        );
        let x = [0.3, -0.8];
        let j = q.jacobian(&x);
        let h = 1e-6;
        for c in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[c] += h;
            xm[c] -= h;
            let (fp, fm) = (q.value(&xp), q.value(&xm));
            for r in 0..2 {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                assert!((fd - j[(r, c)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn quartic_derivatives() {
        let f = CoordinatePower::new(1, 4);
        assert_eq!(f.value(&[2.0]), alloc::vec![16.0]);
        assert_eq!(f.jacobian(&[2.0])[(0, 0)], 32.0);
        assert_eq!(f.hessian_vector(&[2.0], &[1.0], &[1.0]).unwrap(), alloc::vec![48.0]);
    }
}
