//! Backtracking composite Gauss-Newton (prox-linear) method for
//!
//! ```text
//! min_{x ∈ D} g(F(x))
//! ```
//!
//! with `F` smooth, `g` convex and finite valued, and `D` closed and convex.
//! Each outer iteration minimizes the partial linearization
//! `h(x, y) = g(F(x) + ∇F(x)(y − x))` plus `(μ/2)‖y − x‖²` over `D`, and
//! multiplies `μ` by `τ` until the true objective at the candidate is
//! majorized by that model.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod convex;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod linalg;
pub mod maps;
pub mod problem;
pub mod subproblem;

pub use convex::{Outer, Set};
pub use driver::{backtracking_step, run, IterateRecord, RunOutcome, RunStatus, SolverConfig, StepResult};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use problem::{CompositeProblem, FeasibleSet, OuterConvex, SmoothMap};
pub use subproblem::{criticality_measure, solve_subproblem, InnerConfig, SubproblemSolution};
