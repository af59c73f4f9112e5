//! Matrix-free conjugate gradients for symmetric positive (semi)definite
//! systems.

use std::fmt;

use crate::vecops;

/// Fixed symmetric positive definite preconditioner `M⁻¹`.
pub trait Preconditioner: Send + Sync + fmt::Debug {
    fn apply(&self, r: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    pub converged: bool,
    /// Recurrence residual `‖rhs − H x‖` at exit.
    pub residual_norm: f64,
    pub initial_residual_norm: f64,
    /// `½xᵀHx − rhsᵀx − (same at the start)`, accumulated as the sum of the
    /// per-step decreases `−½·stepₖ·rₖᵀzₖ`, so it is negative whenever CG
    /// took a step.
    pub model_decrease: f64,
}

/// Solves `H x = rhs` starting from the contents of `x`. Stops as soon as
/// `‖r‖ ≤ rel_tol · ‖r₀‖` or after `max_iter` iterations. The final iterate
/// is always returned; `converged` reports whether the tolerance was met.
pub fn conjugate_gradient<F>(
    apply: F,
    rhs: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
    precond: Option<&dyn Preconditioner>,
) -> CgReport
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = rhs.len();
    assert_eq!(x.len(), n, "cg: start vector length");

    let mut hp = vec![0.0; n];
    apply(x, &mut hp);
    let mut r: Vec<f64> = rhs.iter().zip(&hp).map(|(b, h)| b - h).collect();
    let r0 = vecops::norm2(&r);
    let target = rel_tol * r0;

    let mut z = vec![0.0; n];
    let precondition = |r: &[f64], z: &mut [f64]| match precond {
        Some(m) => m.apply(r, z),
        None => z.copy_from_slice(r),
    };
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = vecops::dot(&r, &z);
    let mut rnorm = r0;
    let mut iterations = 0;
    let mut model_decrease = 0.0;

    while rnorm > target && iterations < max_iter {
        apply(&p, &mut hp);
        let curvature = vecops::dot(&p, &hp);
        if !(curvature > 0.0) {
            // p lies in the null space (or H is indefinite): no further progress.
            break;
        }
        let step = rz / curvature;
        model_decrease -= 0.5 * step * rz;
        vecops::axpy(step, &p, x);
        vecops::axpy(-step, &hp, &mut r);
        iterations += 1;
        rnorm = vecops::norm2(&r);
        if rnorm <= target {
            break;
        }
        precondition(&r, &mut z);
        let rz_next = vecops::dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }

    CgReport {
        iterations,
        converged: rnorm <= target,
        residual_norm: rnorm,
        initial_residual_norm: r0,
        model_decrease,
    }
}
