//! Problem instances and synthetic test-problem generation.

mod noise;
mod phantom;
mod setup;

use std::sync::Arc;

use crate::linops::{expect_len, lambda_max_normal, LinearMap};
use crate::vecops;
use crate::{Error, Result};

pub use noise::{add_noise, NoisyData};
pub use phantom::{default_shapes, phantom_piecewise, Shape, ShapeKind};
pub use setup::{make_problem, AlphaChoice, DeltaChoice, GeneratedProblem, OperatorKind, ProblemConfig};

/// `min_x ½‖Ax − b‖² + α‖Bx‖₁` with the spectral constants every solver
/// derives its parameters from.
#[derive(Debug, Clone)]
pub struct Problem {
    a: Arc<dyn LinearMap>,
    b: Arc<dyn LinearMap>,
    data: Vec<f64>,
    alpha: f64,
    lambda_a: f64,
    lambda_b: f64,
}

impl Problem {
    /// Validates dimensions and caches `λ_max(AᵀA)` and `λ_max(BᵀB)`.
    pub fn new(
        a: Arc<dyn LinearMap>,
        b: Arc<dyn LinearMap>,
        data: Vec<f64>,
        alpha: f64,
    ) -> Result<Self> {
        let lambda_a = lambda_max_normal(&*a);
        let lambda_b = lambda_max_normal(&*b);
        Self::with_spectrum(a, b, data, alpha, lambda_a, lambda_b)
    }

    /// As [`Problem::new`] but with precomputed spectral constants.
    pub fn with_spectrum(
        a: Arc<dyn LinearMap>,
        b: Arc<dyn LinearMap>,
        data: Vec<f64>,
        alpha: f64,
        lambda_a: f64,
        lambda_b: f64,
    ) -> Result<Self> {
        expect_len("regularizer domain", a.domain_dim(), b.domain_dim())?;
        expect_len("data length", a.range_dim(), data.len())?;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::config("alpha", format!("must be positive and finite, got {alpha}")));
        }
        Ok(Problem {
            a,
            b,
            data,
            alpha,
            lambda_a,
            lambda_b,
        })
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::with_spectrum(
            self.a.clone(),
            self.b.clone(),
            self.data.clone(),
            alpha,
            self.lambda_a,
            self.lambda_b,
        )
    }

    pub fn forward(&self) -> &dyn LinearMap {
        &*self.a
    }

    pub fn regularizer(&self) -> &dyn LinearMap {
        &*self.b
    }

    pub fn forward_arc(&self) -> Arc<dyn LinearMap> {
        self.a.clone()
    }

    pub fn regularizer_arc(&self) -> Arc<dyn LinearMap> {
        self.b.clone()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Unknowns `n`.
    pub fn n(&self) -> usize {
        self.a.domain_dim()
    }

    /// Rows of `B`.
    pub fn l(&self) -> usize {
        self.b.range_dim()
    }

    pub fn lambda_a(&self) -> f64 {
        self.lambda_a
    }

    pub fn lambda_b(&self) -> f64 {
        self.lambda_b
    }

    /// `λ_max(AᵀA) / √λ_max(BᵀB)`; makes `r^k/r⁰` invariant under
    /// `(x, A, B) → (x/η, ηA, ηB)`.
    pub fn gamma_scale(&self) -> f64 {
        self.lambda_a / self.lambda_b.sqrt()
    }

    /// `Ax − b`.
    pub fn data_residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.a.apply(x);
        vecops::axpy(-1.0, &self.data, &mut r);
        r
    }

    /// `Aᵀ(Ax − b)`.
    pub fn data_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.a.adjoint(&self.data_residual(x))
    }

    /// `φ(x) = ½‖Ax − b‖² + α‖Bx‖₁`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let r = self.data_residual(x);
        0.5 * vecops::dot(&r, &r) + self.alpha * vecops::norm1(&self.b.apply(x))
    }

    /// `∇ₓL_σ(x, z, ζ*) = Aᵀ(Ax − b) + Bᵀ(ζ* + σ(Bx − z))`.
    pub fn lagrangian_grad(&self, x: &[f64], z: &[f64], zeta: &[f64], sigma: f64) -> Vec<f64> {
        let bx = self.b.apply(x);
        let mut w = zeta.to_vec();
        vecops::fill_with(&mut w, |i| zeta[i] + sigma * (bx[i] - z[i]));
        let mut g = self.data_gradient(x);
        vecops::axpy(1.0, &self.b.adjoint(&w), &mut g);
        g
    }

    /// The two parts of the first-order residual:
    /// `(‖Aᵀ(Ax − b) + Bᵀz*‖, ‖Bx − z‖)`.
    pub fn residual_parts(&self, x: &[f64], z: &[f64], zstar: &[f64]) -> (f64, f64) {
        let mut g = self.data_gradient(x);
        vecops::axpy(1.0, &self.b.adjoint(zstar), &mut g);
        let bx = self.b.apply(x);
        (vecops::norm2(&g), vecops::dist2(&bx, z))
    }

    /// `r = (‖Aᵀ(Ax − b) + Bᵀz*‖² + γ²‖Bx − z‖²)^{1/2}` with `γ` from
    /// [`Problem::gamma_scale`].
    pub fn residual(&self, x: &[f64], z: &[f64], zstar: &[f64]) -> f64 {
        let (stat, feas) = self.residual_parts(x, z, zstar);
        combine_residual(stat, feas, self.gamma_scale())
    }
}

pub(crate) fn combine_residual(stationarity: f64, feasibility: f64, gamma: f64) -> f64 {
    (stationarity * stationarity + gamma * gamma * feasibility * feasibility).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{Identity, TvDifferenceOp};

    fn tiny() -> Problem {
        Problem::new(
            Arc::new(Identity(4)),
            Arc::new(TvDifferenceOp::new(2, 2)),
            vec![1.0, 2.0, 3.0, 4.0],
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn spectral_constants() {
        let p = tiny();
        assert!((p.lambda_a() - 1.0).abs() < 1e-8);
        // BᵀB of a 2×2 grid is the 4-cycle Laplacian with λ_max = 4
        assert!((p.lambda_b() - 4.0).abs() < 1e-3);
        assert!((p.gamma_scale() - p.lambda_a() / p.lambda_b().sqrt()).abs() < 1e-15);
    }

    #[test]
    fn residual_of_zero_triple_is_norm_of_atb() {
        let p = tiny();
        let r = p.residual(&[0.0; 4], &[0.0; 4], &[0.0; 4]);
        assert!((r - 30f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let a: Arc<dyn LinearMap> = Arc::new(Identity(4));
        let b: Arc<dyn LinearMap> = Arc::new(TvDifferenceOp::new(2, 2));
        assert!(Problem::new(a.clone(), b.clone(), vec![0.0; 3], 1.0).is_err());
        assert!(Problem::new(a.clone(), b.clone(), vec![0.0; 4], 0.0).is_err());
        let b_bad: Arc<dyn LinearMap> = Arc::new(TvDifferenceOp::new(3, 3));
        assert!(Problem::new(a, b_bad, vec![0.0; 4], 1.0).is_err());
    }
}
