//! Matrix-free solvers for ℓ1-regularized least-squares problems
//!
//! ```text
//!     min_x  ½‖Ax − b‖² + α‖Bx‖₁
//! ```
//!
//! with `B` typically the anisotropic discrete gradient of an image (total
//! variation regularization). The main solver is an inexact augmented
//! Lagrangian method ([`alm`]) whose subproblems are minimized by a
//! regularized SCD semismooth* Newton method ([`subproblem`]). Chambolle–Pock,
//! ADMM and a smoothed Barzilai–Borwein iteration live in [`baselines`] and
//! report through the same residual and [`metrics`] machinery, so runs of
//! different methods can be compared directly.
//!
//! All operators are matrix-free [`linops::LinearMap`]s. With the default
//! `parallel` feature the operator kernels and vector reductions run on
//! rayon; every reduction uses a fixed chunking so results are bit-identical
//! for any thread count, and identical to the sequential build.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alm;
pub mod baselines;
pub mod cg;
mod error;
pub mod image;
pub mod linops;
pub mod metrics;
pub mod problems;
pub mod prox;
pub mod subproblem;
pub mod vecops;

pub use error::{Error, Result};
pub use image::ImageGrid;
pub use linops::LinearMap;
pub use metrics::{IterationRecord, Solution, Status};
pub use problems::Problem;
