use super::{stop_status, Recorder};
use crate::cg::conjugate_gradient;
use crate::linops::expect_len;
use crate::metrics::{Solution, Status};
use crate::problems::combine_residual;
use crate::vecops;
use crate::{Error, Problem, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CpParams {
    /// Primal step; defaults to `4/λ_max(AᵀA)`.
    pub tau: Option<f64>,
    /// Dual step; defaults to `1/(τ·λ_max(BᵀB))`.
    pub sigma: Option<f64>,
    pub theta: f64,
    pub eps_opt: f64,
    pub max_iter: usize,
    /// Relative tolerance of the inner CG solve.
    pub cg_tol: f64,
    /// Defaults to `10·n`.
    pub max_cg: Option<usize>,
}

impl Default for CpParams {
    fn default() -> Self {
        CpParams {
            tau: None,
            sigma: None,
            theta: 1.0,
            eps_opt: 1e-6,
            max_iter: 20_000,
            cg_tol: 1e-3,
            max_cg: None,
        }
    }
}

impl CpParams {
    /// `(τ, σ)` after applying the defaults.
    pub fn steps(&self, problem: &Problem) -> (f64, f64) {
        let tau = self.tau.unwrap_or(4.0 / problem.lambda_a());
        let sigma = self.sigma.unwrap_or(1.0 / (tau * problem.lambda_b()));
        (tau, sigma)
    }

    fn validate(&self, tau: f64, sigma: f64) -> Result<()> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::config("solver.tau", "must be positive"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::config("solver.sigma", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::config("solver.theta", "must lie in [0, 1]"));
        }
        if !(self.cg_tol > 0.0 && self.cg_tol < 1.0) {
            return Err(Error::config("solver.cg_tol", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Chambolle–Pock primal–dual iteration. Iteration `k` computes
/// `z*^{k+1} = clamp(z*^k + σBx̄^k, ±α)`, the primal companion
/// `z^k = (z*^k − z*^{k+1})/σ + Bx̄^k`, the residual of `(x^k, z^k, z*^{k+1})`,
/// and then `x^{k+1} = x^k − τ(I + τAᵀA)⁻¹(Aᵀ(Ax^k − b) + Bᵀz*^{k+1})` by CG.
pub fn chambolle_pock(
    problem: &Problem,
    x0: &[f64],
    zstar0: &[f64],
    params: &CpParams,
    reference: Option<&[f64]>,
) -> Result<Solution> {
    expect_len("initial x", problem.n(), x0.len())?;
    expect_len("initial multiplier", problem.l(), zstar0.len())?;
    let (tau, sigma) = params.steps(problem);
    params.validate(tau, sigma)?;
    let (a, b) = (problem.forward(), problem.regularizer());
    let alpha = problem.alpha();
    let gamma = problem.gamma_scale();
    let n = problem.n();
    let max_cg = params.max_cg.unwrap_or(10 * n).max(1);

    let mut rec = Recorder::new(reference);
    let mut x = x0.to_vec();
    let mut x_bar = x.clone();
    let mut zstar = zstar0.to_vec();
    let mut z = vec![0.0; problem.l()];
    let mut u = vec![0.0; problem.l()];
    let mut cg_prev = 0;
    let mut k = 0;

    let status = loop {
        let bxbar = b.apply(&x_bar);
        vecops::fill_with(&mut u, |i| zstar[i] + sigma * bxbar[i]);
        let zstar_next: Vec<f64> = u.iter().map(|v| v.clamp(-alpha, alpha)).collect();
        // (u − clamp(u))/σ is exactly zero wherever |u| ≤ α
        vecops::fill_with(&mut z, |i| (u[i] - zstar_next[i]) / sigma);
        zstar = zstar_next;

        // g = Aᵀ(Ax − b) + Bᵀz*^{k+1}
        let mut g = problem.data_gradient(&x);
        vecops::axpy(1.0, &b.adjoint(&zstar), &mut g);
        let bx = b.apply(&x);
        let r = combine_residual(vecops::norm2(&g), vecops::dist2(&bx, &z), gamma);
        let rel = rec.push(k, sigma, r, &x, &z, 0, cg_prev);
        if let Some(s) = stop_status(rel, params.eps_opt) {
            break s;
        }
        if k >= params.max_iter {
            break Status::MaxIterations;
        }

        let mut delta = vec![0.0; n];
        let rep = conjugate_gradient(
            |v, o| {
                let atav = a.adjoint(&a.apply(v));
                vecops::fill_with(o, |i| v[i] + tau * atav[i]);
            },
            &g,
            &mut delta,
            params.cg_tol,
            max_cg,
            None,
        );
        cg_prev = rep.iterations;
        let x_prev = x.clone();
        vecops::axpy(-tau, &delta, &mut x);
        let theta = params.theta;
        vecops::fill_with(&mut x_bar, |i| x[i] + theta * (x[i] - x_prev[i]));
        k += 1;
    };
    Ok(rec.finish(x, z, zstar, status))
}
