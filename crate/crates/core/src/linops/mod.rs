//! Matrix-free linear operators.
//!
//! Every operator maps `ℝ^domain_dim → ℝ^range_dim` and supplies its exact
//! adjoint. Images are flattened row-major (see [`crate::ImageGrid`]).
//! Operators are immutable once built and may be shared across threads.

mod blur;
mod dense;
mod radon;
mod sparse;
mod spectral;
mod tv;

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::vecops;
use crate::{Error, Result};

pub use blur::{binomial_kernel, blur_operator, BlurOp};
pub use dense::DenseMatrix;
pub use radon::{radon_operator, RadonGeometry, RadonOp};
pub use sparse::CsrMatrix;
pub use spectral::{
    estimate_largest_eigenvalue, lambda_max_normal, power_iteration, PowerEstimate,
    LAMBDA_MAX_ITERS, LAMBDA_MAX_SEED, LAMBDA_MAX_TOL,
};
pub use tv::{apply_tv_diff, apply_tv_diff_adjoint, TvDifferenceOp};

pub trait LinearMap: Send + Sync + fmt::Debug {
    fn domain_dim(&self) -> usize;
    fn range_dim(&self) -> usize;

    /// `out = M x`. Panics if the slice lengths do not match the operator.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);

    /// `out = Mᵀ y`. Panics if the slice lengths do not match the operator.
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.range_dim()];
        self.apply_into(x, &mut out);
        out
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.domain_dim()];
        self.adjoint_into(y, &mut out);
        out
    }

    fn checked_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        expect_len("operator input", self.domain_dim(), x.len())?;
        Ok(self.apply(x))
    }

    fn checked_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        expect_len("adjoint input", self.range_dim(), y.len())?;
        Ok(self.adjoint(y))
    }
}

pub(crate) fn expect_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}

#[inline]
pub(crate) fn assert_dims(op: &dyn LinearMap, input: usize, output: usize, adjoint: bool) {
    let (din, dout) = if adjoint {
        (op.range_dim(), op.domain_dim())
    } else {
        (op.domain_dim(), op.range_dim())
    };
    assert!(
        input == din && output == dout,
        "{op:?}: expected {din} -> {dout}, got {input} -> {output}"
    );
}

impl<T: LinearMap + ?Sized> LinearMap for Arc<T> {
    fn domain_dim(&self) -> usize {
        (**self).domain_dim()
    }
    fn range_dim(&self) -> usize {
        (**self).range_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).apply_into(x, out)
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        (**self).adjoint_into(y, out)
    }
}

impl<T: LinearMap + ?Sized> LinearMap for &T {
    fn domain_dim(&self) -> usize {
        (**self).domain_dim()
    }
    fn range_dim(&self) -> usize {
        (**self).range_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).apply_into(x, out)
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        (**self).adjoint_into(y, out)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearMap for Identity {
    fn domain_dim(&self) -> usize {
        self.0
    }
    fn range_dim(&self) -> usize {
        self.0
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert_dims(self, x.len(), out.len(), false);
        out.copy_from_slice(x);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        assert_dims(self, y.len(), out.len(), true);
        out.copy_from_slice(y);
    }
}

/// Diagonal matrix `diag(d)`.
#[derive(Debug, Clone)]
pub struct Diagonal(pub Vec<f64>);

impl LinearMap for Diagonal {
    fn domain_dim(&self) -> usize {
        self.0.len()
    }
    fn range_dim(&self) -> usize {
        self.0.len()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert_dims(self, x.len(), out.len(), false);
        vecops::fill_with(out, |i| self.0[i] * x[i]);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.apply_into(y, out)
    }
}

/// `factor · M`.
#[derive(Debug, Clone)]
pub struct Scaled<M> {
    pub inner: M,
    pub factor: f64,
}

impl<M: LinearMap> Scaled<M> {
    pub fn new(inner: M, factor: f64) -> Self {
        Scaled { inner, factor }
    }
}

impl<M: LinearMap> LinearMap for Scaled<M> {
    fn domain_dim(&self) -> usize {
        self.inner.domain_dim()
    }
    fn range_dim(&self) -> usize {
        self.inner.range_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.apply_into(x, out);
        out.iter_mut().for_each(|v| *v *= self.factor);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.inner.adjoint_into(y, out);
        out.iter_mut().for_each(|v| *v *= self.factor);
    }
}

/// The self-adjoint product `MᵀM`.
#[derive(Debug, Clone, Copy)]
pub struct Normal<M>(pub M);

impl<M: LinearMap> LinearMap for Normal<M> {
    fn domain_dim(&self) -> usize {
        self.0.domain_dim()
    }
    fn range_dim(&self) -> usize {
        self.0.domain_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let tmp = self.0.apply(x);
        self.0.adjoint_into(&tmp, out);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.apply_into(y, out)
    }
}

/// Worst relative adjoint mismatch `|⟨Mu, v⟩ − ⟨u, Mᵀv⟩| / (‖Mu‖‖v‖)` over
/// `trials` Gaussian pairs drawn from `seed`.
pub fn adjoint_mismatch(op: &dyn LinearMap, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let u: Vec<f64> = (0..op.domain_dim())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let v: Vec<f64> = (0..op.range_dim())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let mu = op.apply(&u);
        let mtv = op.adjoint(&v);
        let scale = vecops::norm2(&mu) * vecops::norm2(&v);
        let gap = (vecops::dot(&mu, &v) - vecops::dot(&u, &mtv)).abs();
        if scale > 0.0 {
            worst = worst.max(gap / scale);
        } else if gap > 0.0 {
            worst = f64::INFINITY;
        }
    }
    worst
}

/// Relative tolerance used by [`verify_adjoint`].
pub const ADJOINT_TOL: f64 = 1e-10;

/// Fails with a configuration error when the operator's adjoint does not
/// match its forward map to [`ADJOINT_TOL`].
pub fn verify_adjoint(op: &dyn LinearMap, name: &str) -> Result<()> {
    let gap = adjoint_mismatch(op, 3, 0x5eed);
    if gap <= ADJOINT_TOL {
        Ok(())
    } else {
        Err(Error::config(
            name,
            format!("adjoint inconsistent with forward map (relative gap {gap:e})"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal_are_self_adjoint() {
        assert!(adjoint_mismatch(&Identity(7), 4, 1) < 1e-15);
        let d = Diagonal(vec![1.0, -2.0, 3.5]);
        assert!(adjoint_mismatch(&d, 4, 2) < 1e-15);
        assert_eq!(d.apply(&[1.0, 1.0, 2.0]), vec![1.0, -2.0, 7.0]);
    }

    #[test]
    fn scaled_and_normal_compose() {
        let d = Diagonal(vec![1.0, 2.0]);
        let s = Scaled::new(&d, 3.0);
        assert_eq!(s.apply(&[1.0, 1.0]), vec![3.0, 6.0]);
        assert_eq!(Normal(&s).apply(&[1.0, 1.0]), vec![9.0, 36.0]);
    }

    #[test]
    fn checked_apply_reports_mismatch() {
        let err = Identity(3).checked_apply(&[1.0, 2.0]).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 3,
                actual: 2,
                ..
            }
        ));
    }

    #[test]
    #[should_panic]
    fn apply_into_panics_on_bad_length() {
        let mut out = vec![0.0; 2];
        Identity(3).apply_into(&[1.0, 2.0, 3.0], &mut out);
    }

    #[derive(Debug)]
    struct Broken;
    impl LinearMap for Broken {
        fn domain_dim(&self) -> usize {
            2
        }
        fn range_dim(&self) -> usize {
            2
        }
        fn apply_into(&self, x: &[f64], out: &mut [f64]) {
            out[0] = x[0] + x[1];
            out[1] = x[1];
        }
        fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
            out.copy_from_slice(y);
        }
    }

    #[test]
    fn verify_adjoint_rejects_inconsistent_pair() {
        assert!(verify_adjoint(&Broken, "problem.operator").is_err());
        assert!(verify_adjoint(&Identity(4), "problem.operator").is_ok());
    }
}
