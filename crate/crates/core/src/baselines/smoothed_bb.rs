use super::{stop_status, Recorder};
use crate::linops::expect_len;
use crate::metrics::{Solution, Status};
use crate::vecops;
use crate::{Error, Problem, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BbParams {
    /// `ε` in `Σ √((Bx)ᵢ² + ε)`.
    pub epsilon_smooth: f64,
    pub eps_opt: f64,
    pub max_iter: usize,
    /// First and fallback step; defaults to `1/λ_max(AᵀA)`.
    pub tau0: Option<f64>,
}

impl Default for BbParams {
    fn default() -> Self {
        BbParams {
            epsilon_smooth: 1e-2,
            eps_opt: 1e-6,
            max_iter: 20_000,
            tau0: None,
        }
    }
}

/// `d(x)ᵢ = (Bx)ᵢ/√((Bx)ᵢ² + ε)`.
fn smoothing_weights(bx: &[f64], eps: f64) -> Vec<f64> {
    bx.iter().map(|v| v / (v * v + eps).sqrt()).collect()
}

/// Gradient of `½‖Ax − b‖² + α Σ √((Bx)ᵢ² + ε)`, together with `Bx` and
/// `α·d(x)`.
pub fn smoothed_gradient(problem: &Problem, x: &[f64], eps: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let bx = problem.regularizer().apply(x);
    let alpha = problem.alpha();
    let ad: Vec<f64> = smoothing_weights(&bx, eps).iter().map(|d| alpha * d).collect();
    let mut g = problem.data_gradient(x);
    vecops::axpy(1.0, &problem.regularizer().adjoint(&ad), &mut g);
    (g, bx, ad)
}

/// Gradient descent with Barzilai–Borwein steps
/// `τ_k = ⟨Δx, Δx⟩/⟨Δx, Δg⟩` on the smoothed objective. The logged residual
/// uses `z = Bx` and `z* = α·d(x)`, so it equals `‖g(x)‖`. The `sigma`
/// column of the log holds the step `τ_k` taken after the recorded iterate.
pub fn smoothed_bb(
    problem: &Problem,
    x0: &[f64],
    params: &BbParams,
    reference: Option<&[f64]>,
) -> Result<Solution> {
    expect_len("initial x", problem.n(), x0.len())?;
    if !(params.epsilon_smooth > 0.0 && params.epsilon_smooth.is_finite()) {
        return Err(Error::config("solver.epsilon_smooth", "must be positive"));
    }
    let tau0 = params.tau0.unwrap_or(1.0 / problem.lambda_a());
    if !(tau0 > 0.0 && tau0.is_finite()) {
        return Err(Error::config("solver.tau0", "must be positive"));
    }
    let eps = params.epsilon_smooth;

    let mut rec = Recorder::new(reference);
    let mut x = x0.to_vec();
    let (mut g, mut bx, mut zstar) = smoothed_gradient(problem, &x, eps);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut k = 0;
    let status = loop {
        let tau = match &prev {
            None => tau0,
            Some((xp, gp)) => {
                let dx = vecops::sub(&x, xp);
                let dg = vecops::sub(&g, gp);
                let den = vecops::dot(&dx, &dg);
                let t = vecops::dot(&dx, &dx) / den;
                if den > 0.0 && t.is_finite() && t > 0.0 {
                    t
                } else {
                    tau0
                }
            }
        };
        let r = vecops::norm2(&g);
        let rel = rec.push(k, tau, r, &x, &bx, 0, 0);
        if let Some(s) = stop_status(rel, params.eps_opt) {
            break s;
        }
        if x.iter().any(|v| !v.is_finite()) {
            break Status::Diverged;
        }
        if k >= params.max_iter {
            break Status::MaxIterations;
        }
        let mut x_next = x.clone();
        vecops::axpy(-tau, &g, &mut x_next);
        let (g_next, bx_next, zs_next) = smoothed_gradient(problem, &x_next, eps);
        prev = Some((std::mem::replace(&mut x, x_next), std::mem::replace(&mut g, g_next)));
        bx = bx_next;
        zstar = zs_next;
        k += 1;
    };
    Ok(rec.finish(x, bx, zstar, status))
}
