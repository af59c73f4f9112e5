use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{LinearMap, Normal};
use crate::vecops;

pub const LAMBDA_MAX_ITERS: usize = 200;
pub const LAMBDA_MAX_TOL: f64 = 1e-4;
pub const LAMBDA_MAX_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerEstimate {
    pub value: f64,
    pub iterations: usize,
    /// Rayleigh quotient after each iteration.
    pub history: Vec<f64>,
}

/// Power iteration on a self-adjoint positive semidefinite operator, starting
/// from a Gaussian vector drawn from `seed`. Stops once the Rayleigh quotient
/// changes by less than `tol` relative, or after `max_iter` iterations.
pub fn power_iteration(op: &dyn LinearMap, max_iter: usize, tol: f64, seed: u64) -> PowerEstimate {
    assert_eq!(op.domain_dim(), op.range_dim(), "power iteration needs a square operator");
    let n = op.domain_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nv = vecops::norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut w = vec![0.0; n];
    let mut history = Vec::new();
    let mut value = 0.0;
    for it in 1..=max_iter.max(1) {
        op.apply_into(&v, &mut w);
        let rayleigh = vecops::dot(&v, &w).max(0.0);
        history.push(rayleigh);
        let nw = vecops::norm2(&w);
        if nw == 0.0 || !nw.is_finite() {
            return PowerEstimate {
                value: rayleigh,
                iterations: it,
                history,
            };
        }
        let settled = it > 1 && (rayleigh - value).abs() <= tol * rayleigh;
        value = rayleigh;
        if settled {
            return PowerEstimate {
                value,
                iterations: it,
                history,
            };
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    PowerEstimate {
        value,
        iterations: history.len(),
        history,
    }
}

/// Largest eigenvalue of a self-adjoint PSD operator (`AᵀA` or `BᵀB`).
pub fn estimate_largest_eigenvalue(op: &dyn LinearMap, max_iter: usize, tol: f64) -> f64 {
    power_iteration(op, max_iter, tol, LAMBDA_MAX_SEED).value
}

/// `λ_max(MᵀM)` with the default iteration cap, tolerance and seed.
pub fn lambda_max_normal(m: &dyn LinearMap) -> f64 {
    estimate_largest_eigenvalue(&Normal(m), LAMBDA_MAX_ITERS, LAMBDA_MAX_TOL)
}
