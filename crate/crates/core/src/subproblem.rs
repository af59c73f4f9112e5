//! Inexact regularized SCD semismooth* Newton method for the ALM subproblem
//!
//! ```text
//!     min_{x,z} ψ(x, z) = ½‖Ax − b‖² + α‖z‖₁ + ⟨ζ*, Bx − z⟩ + σ/2 ‖Bx − z‖²
//! ```
//!
//! for fixed `ζ*` and `σ`. Eliminating `z` gives `Ψ(x) = prox_{α/σ}(Bx + ζ*/σ)`
//! and the reduced function `ϑ(x) = ψ(x, Ψ(x))`, which is convex and
//! continuously differentiable. Each iteration takes a CG approximation step
//! on `ψ(·, z_j)`, then a regularized Newton step on `ϑ` with an Armijo line
//! search.

use std::sync::Arc;

use crate::cg::{conjugate_gradient, CgReport, Preconditioner};
use crate::prox::{moreau_env, moreau_scalar, prox_l1};
use crate::vecops;
use crate::{Error, Problem, Result};

/// The data fixing one subproblem: the problem, the penalty `σ` and the
/// multiplier `ζ*`.
#[derive(Debug, Clone, Copy)]
pub struct SubproblemSpec<'a> {
    pub problem: &'a Problem,
    pub sigma: f64,
    pub zeta_star: &'a [f64],
}

impl<'a> SubproblemSpec<'a> {
    pub fn new(problem: &'a Problem, sigma: f64, zeta_star: &'a [f64]) -> Result<Self> {
        crate::linops::expect_len("multiplier length", problem.l(), zeta_star.len())?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::config("solver.sigma", format!("must be positive, got {sigma}")));
        }
        Ok(SubproblemSpec {
            problem,
            sigma,
            zeta_star,
        })
    }

    fn tau(&self) -> f64 {
        self.problem.alpha() / self.sigma
    }

    /// `Bx + ζ*/σ` from a precomputed `Bx`.
    fn shift(&self, bx: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; bx.len()];
        let (s, zeta) = (self.sigma, self.zeta_star);
        vecops::fill_with(&mut w, |i| bx[i] + zeta[i] / s);
        w
    }

    /// `−‖ζ*‖²/(2σ)`, the infimum bound of `ψ`.
    pub fn lower_bound(&self) -> f64 {
        -vecops::dot(self.zeta_star, self.zeta_star) / (2.0 * self.sigma)
    }

    /// `v ↦ (AᵀA + σBᵀB) v`.
    fn apply_h_sigma(&self, v: &[f64], out: &mut [f64]) {
        let weights = Weights::Uniform(self.sigma);
        apply_weighted_normal(self.problem, &weights, v, out);
    }
}

enum Weights<'w> {
    Uniform(f64),
    Diagonal(&'w [f64]),
}

/// `out = (AᵀA + BᵀWB) v`.
fn apply_weighted_normal(problem: &Problem, w: &Weights<'_>, v: &[f64], out: &mut [f64]) {
    let a = problem.forward();
    let b = problem.regularizer();
    let av = a.apply(v);
    let mut bv = b.apply(v);
    match w {
        Weights::Uniform(s) => bv.iter_mut().for_each(|x| *x *= s),
        Weights::Diagonal(d) => bv.iter_mut().zip(d.iter()).for_each(|(x, d)| *x *= d),
    }
    a.adjoint_into(&av, out);
    let btwbv = b.adjoint(&bv);
    vecops::axpy(1.0, &btwbv, out);
}

/// Tolerance sequence `ε^j` for the inner CG solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Constant(f64),
    /// `initial · ratio^j`.
    Geometric { initial: f64, ratio: f64 },
}

impl Schedule {
    pub fn at(&self, j: usize) -> f64 {
        match *self {
            Schedule::Constant(v) => v,
            Schedule::Geometric { initial, ratio } => initial * ratio.powi(j.min(i32::MAX as usize) as i32),
        }
    }

    fn first(&self) -> f64 {
        self.at(0)
    }
}

#[derive(Debug, Clone)]
pub struct SsnParams {
    /// Armijo constant `ν ∈ (0, 1)`.
    pub nu: f64,
    pub chi1: f64,
    pub chi_bar1: f64,
    pub chi2: f64,
    pub chi_bar2: f64,
    /// Initial Newton regularization `ρ⁰`.
    pub rho0: f64,
    pub eps_a: Schedule,
    pub eps_n: Schedule,
    /// Requested tolerance on `‖∇ₓψ(x_j, z_j)‖`.
    pub eps: f64,
    pub max_iter: usize,
    /// CG iteration cap per solve; `None` means `10·n`.
    pub max_cg: Option<usize>,
    pub max_backtracks: u32,
    /// Fixed preconditioner for both CG systems.
    pub preconditioner: Option<Arc<dyn Preconditioner>>,
    /// Store every iterate `x_j` in the stats.
    pub keep_iterates: bool,
}

impl Default for SsnParams {
    fn default() -> Self {
        SsnParams {
            nu: 0.1,
            chi1: -1.2,
            chi_bar1: 4.0,
            chi2: -0.8,
            chi_bar2: 0.25,
            rho0: 1.0,
            eps_a: Schedule::Constant(0.1),
            eps_n: Schedule::Constant(0.1),
            eps: 1e-8,
            max_iter: 200,
            max_cg: None,
            max_backtracks: 60,
            preconditioner: None,
            keep_iterates: false,
        }
    }
}

impl SsnParams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(key, what))
            }
        };
        check(self.nu > 0.0 && self.nu < 1.0, "solver.nu", "must lie in (0, 1)")?;
        check(self.chi1 < -1.0, "solver.chi1", "must be below -1")?;
        check(self.chi2 > -1.0 && self.chi2 < 0.0, "solver.chi2", "must lie in (-1, 0)")?;
        check(self.chi_bar1 > 1.0, "solver.chi_bar1", "must exceed 1")?;
        check(self.chi_bar2 > 0.0 && self.chi_bar2 < 1.0, "solver.chi_bar2", "must lie in (0, 1)")?;
        check(self.rho0 > 0.0 && self.rho0.is_finite(), "solver.rho0", "must be positive")?;
        let eps_a = self.eps_a.first();
        let eps_n = self.eps_n.first();
        check(eps_a > 0.0 && eps_a < 1.0, "solver.eps_a", "must lie in (0, 1)")?;
        check(eps_n > 0.0 && eps_n < 1.0, "solver.eps_n", "must lie in (0, 1)")?;
        check(self.eps >= 0.0, "solver.eps", "must be nonnegative")?;
        check(self.max_iter >= 1, "solver.max_inner", "must be at least 1")?;
        check(self.max_backtracks >= 1, "solver.max_backtracks", "must be at least 1")?;
        Ok(())
    }

    fn cg_cap(&self, n: usize) -> usize {
        self.max_cg.unwrap_or(10 * n).max(1)
    }
}

/// `ψ(x, z)`.
pub fn psi_value(spec: &SubproblemSpec<'_>, x: &[f64], z: &[f64]) -> f64 {
    let p = spec.problem;
    let r = p.data_residual(x);
    let bx = p.regularizer().apply(x);
    let gap = vecops::sub(&bx, z);
    0.5 * vecops::dot(&r, &r)
        + p.alpha() * vecops::norm1(z)
        + vecops::dot(spec.zeta_star, &gap)
        + 0.5 * spec.sigma * vecops::dot(&gap, &gap)
}

/// `∇ₓψ(x, z) = Aᵀ(Ax − b) + Bᵀ(ζ* + σ(Bx − z))`.
pub fn grad_x_psi(spec: &SubproblemSpec<'_>, x: &[f64], z: &[f64]) -> Vec<f64> {
    spec.problem.lagrangian_grad(x, z, spec.zeta_star, spec.sigma)
}

/// `Ψ(x) = prox_{α/σ}(Bx + ζ*/σ)`, the minimizer of `ψ(x, ·)`.
pub fn psi_argmin_z(spec: &SubproblemSpec<'_>, x: &[f64]) -> Vec<f64> {
    let bx = spec.problem.regularizer().apply(x);
    prox_l1(&spec.shift(&bx), spec.tau())
}

/// `ϑ` together with the intermediates the Newton iteration reuses.
#[derive(Debug, Clone)]
struct ThetaEval {
    value: f64,
    grad: Vec<f64>,
    /// `Ax − b`
    residual: Vec<f64>,
    /// `Bx + ζ*/σ`
    shifted: Vec<f64>,
    /// `Ψ(x)`
    z: Vec<f64>,
}

fn eval_theta(spec: &SubproblemSpec<'_>, x: &[f64]) -> ThetaEval {
    let p = spec.problem;
    let (s, tau) = (spec.sigma, spec.tau());
    let residual = p.data_residual(x);
    let shifted = spec.shift(&p.regularizer().apply(x));
    let z = prox_l1(&shifted, tau);
    // ζ* + σ(Bx − Ψ(x)) = σ·clamp(Bx + ζ*/σ, ±α/σ)
    let mut mult = vec![0.0; shifted.len()];
    vecops::fill_with(&mut mult, |i| s * shifted[i].clamp(-tau, tau));
    let mut grad = p.forward().adjoint(&residual);
    vecops::axpy(1.0, &p.regularizer().adjoint(&mult), &mut grad);
    let value = 0.5 * vecops::dot(&residual, &residual) + s * moreau_env(&shifted, tau)
        + spec.lower_bound();
    debug_assert!(value >= spec.lower_bound());
    ThetaEval {
        value,
        grad,
        residual,
        shifted,
        z,
    }
}

/// `(ϑ(x), ∇ϑ(x))` with one application each of `A`, `Aᵀ`, `B`, `Bᵀ`.
pub fn theta_value_and_grad(spec: &SubproblemSpec<'_>, x: &[f64]) -> (f64, Vec<f64>) {
    let e = eval_theta(spec, x);
    (e.value, e.grad)
}

/// Inner-iteration data after the approximation step.
#[derive(Debug, Clone)]
pub struct NewtonWorkspace {
    pub x_hat: Vec<f64>,
    pub z_hat: Vec<f64>,
    /// `∇ϑ(x̂)`.
    pub x_hat_star: Vec<f64>,
    pub theta_hat: f64,
    /// `I(ẑ) = {i : ẑᵢ ≠ 0}`.
    pub active_set: Vec<usize>,
    pub rho: f64,
    /// `W_ii = σ` off `I(ẑ)`, `ρ/ẑᵢ²` on it.
    pub weights: Vec<f64>,
    pub direction: Vec<f64>,
    residual_hat: Vec<f64>,
    shifted_hat: Vec<f64>,
}

impl NewtonWorkspace {
    fn from_eval(x_hat: Vec<f64>, e: ThetaEval, rho: f64) -> Self {
        let active_set = (0..e.z.len()).filter(|&i| e.z[i] != 0.0).collect();
        NewtonWorkspace {
            x_hat,
            theta_hat: e.value,
            active_set,
            rho,
            weights: Vec::new(),
            direction: Vec::new(),
            z_hat: e.z,
            x_hat_star: e.grad,
            residual_hat: e.residual,
            shifted_hat: e.shifted,
        }
    }

    /// Builds the workspace at an arbitrary point `x̂`.
    pub fn at(spec: &SubproblemSpec<'_>, x_hat: Vec<f64>, rho: f64) -> Self {
        let e = eval_theta(spec, &x_hat);
        Self::from_eval(x_hat, e, rho)
    }

    fn set_weights(&mut self, sigma: f64) {
        let (rho, z) = (self.rho, &self.z_hat);
        self.weights = z
            .iter()
            .map(|&zi| if zi != 0.0 { rho / (zi * zi).max(1e-30) } else { sigma })
            .collect();
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ApproxReport {
    pub cg: CgReport,
    /// `ψ(x̂, z_j) − ψ(x_j, z_j)` (negative).
    pub model_decrease: f64,
    /// `ψ(x̂, ẑ) − ψ(x̂, z_j)` (nonpositive).
    pub z_decrease: f64,
}

/// Step 1: CG on `min_x ψ(x, z_j)` from `x_j` until the gradient has shrunk
/// by `ε_A`, then `ẑ = Ψ(x̂)` and `x̂* = ∇ϑ(x̂)`. `grad_j` is `∇ₓψ(x_j, z_j)`.
pub fn approximation_step(
    spec: &SubproblemSpec<'_>,
    x_j: &[f64],
    z_j: &[f64],
    grad_j: &[f64],
    rho: f64,
    params: &SsnParams,
    j: usize,
) -> (NewtonWorkspace, ApproxReport) {
    let n = x_j.len();
    let rhs: Vec<f64> = grad_j.iter().map(|g| -g).collect();
    let mut d = vec![0.0; n];
    let cg = conjugate_gradient(
        |v, o| spec.apply_h_sigma(v, o),
        &rhs,
        &mut d,
        params.eps_a.at(j),
        params.cg_cap(n),
        params.preconditioner.as_deref(),
    );
    let mut x_hat = x_j.to_vec();
    vecops::axpy(1.0, &d, &mut x_hat);
    let e = eval_theta(spec, &x_hat);

    let (alpha, s) = (spec.problem.alpha(), spec.sigma);
    // h(z) − h(ẑ) for h(z) = α|z| + σ/2(z − w)², split as σ/2(z − ẑ)² plus
    // the subgradient gap α|z| − α|ẑ| − g(z − ẑ) at g = σ(w − ẑ) ∈ α∂|ẑ|.
    // Both parts are nonnegative, so the sum cannot change sign by rounding.
    let z_decrease: f64 = -(0..e.z.len())
        .map(|i| {
            let (z, zh, w) = (z_j[i], e.z[i], e.shifted[i]);
            let gap = if zh != 0.0 {
                alpha * (z.abs() - zh.signum() * z)
            } else {
                (alpha * z.abs() - s * w * z).max(0.0)
            };
            0.5 * s * (z - zh) * (z - zh) + gap
        })
        .sum::<f64>();
    let report = ApproxReport {
        cg,
        model_decrease: cg.model_decrease,
        z_decrease,
    };
    (NewtonWorkspace::from_eval(x_hat, e, rho), report)
}

/// Step 2: CG from zero on `(AᵀA + BᵀWB)Δx = −x̂*` to relative tolerance
/// `ε_N`. Fills `ws.weights` and `ws.direction`; falls back to `−x̂*` in the
/// (numerically degenerate) case that CG returns a non-descent direction.
pub fn newton_direction(
    ws: &mut NewtonWorkspace,
    spec: &SubproblemSpec<'_>,
    params: &SsnParams,
    j: usize,
) -> CgReport {
    ws.set_weights(spec.sigma);
    let n = ws.x_hat.len();
    let rhs: Vec<f64> = ws.x_hat_star.iter().map(|g| -g).collect();
    let mut dir = vec![0.0; n];
    let weights = Weights::Diagonal(&ws.weights);
    let report = conjugate_gradient(
        |v, o| apply_weighted_normal(spec.problem, &weights, v, o),
        &rhs,
        &mut dir,
        params.eps_n.at(j),
        params.cg_cap(n),
        params.preconditioner.as_deref(),
    );
    if report.initial_residual_norm > 0.0 && !(vecops::dot(&ws.x_hat_star, &dir) < 0.0) {
        dir = rhs;
    }
    ws.direction = dir;
    report
}

#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    pub x_next: Vec<f64>,
    /// The accepted `l`; the step is `2^{−l}`.
    pub exponent: u32,
    /// `ϑ(x̂ + 2^{−l}Δx) − ϑ(x̂)`, evaluated in difference form.
    pub decrease: f64,
    /// `BΔx`, reused by the ρ update.
    pub b_direction: Vec<f64>,
}

/// Step 3: Armijo backtracking `ϑ(x̂ + 2^{−l}Δx) ≤ ϑ(x̂) + ν2^{−l}⟨x̂*, Δx⟩`.
/// The difference `ϑ(x̂ + tΔx) − ϑ(x̂)` is assembled from `AΔx`, `BΔx` and
/// per-entry Moreau envelope differences, so the test stays meaningful when
/// the decrease is far below the rounding level of `ϑ` itself.
pub fn line_search(
    spec: &SubproblemSpec<'_>,
    ws: &NewtonWorkspace,
    params: &SsnParams,
) -> Result<LineSearchOutcome> {
    let slope = vecops::dot(&ws.x_hat_star, &ws.direction);
    let q = spec.problem.forward().apply(&ws.direction);
    let p = spec.problem.regularizer().apply(&ws.direction);
    let rq = vecops::dot(&ws.residual_hat, &q);
    let qq = vecops::dot(&q, &q);
    let (s, tau) = (spec.sigma, spec.tau());
    let w = &ws.shifted_hat;

    if !(slope < 0.0) {
        return Err(Error::LineSearch {
            backtracks: 0,
            slope,
        });
    }
    for l in 0..=params.max_backtracks {
        let t = 0.5f64.powi(l as i32);
        let env: f64 = w
            .iter()
            .zip(&p)
            .map(|(&wi, &pi)| moreau_scalar(wi + t * pi, tau) - moreau_scalar(wi, tau))
            .sum();
        let diff = t * rq + 0.5 * t * t * qq + s * env;
        if diff <= params.nu * t * slope {
            let mut x_next = ws.x_hat.clone();
            vecops::axpy(t, &ws.direction, &mut x_next);
            return Ok(LineSearchOutcome {
                x_next,
                exponent: l,
                decrease: diff,
                b_direction: p,
            });
        }
    }
    Err(Error::LineSearch {
        backtracks: params.max_backtracks,
        slope,
    })
}

/// `χ = min_{i∈I(ẑ)} (BΔx)ᵢ/ẑᵢ`, or `None` when `I(ẑ)` is empty.
pub fn chi_ratio(z_hat: &[f64], b_direction: &[f64]) -> Option<f64> {
    z_hat
        .iter()
        .zip(b_direction)
        .filter(|(z, _)| **z != 0.0)
        .map(|(z, d)| d / z)
        .reduce(f64::min)
}

/// Step 4 as a pure function of `χ`.
pub fn rho_after(rho: f64, chi: Option<f64>, params: &SsnParams) -> f64 {
    match chi {
        None => rho,
        Some(chi) if chi < params.chi1 => rho * (chi / params.chi1).min(params.chi_bar1),
        Some(chi) if chi > params.chi2 => rho * (chi / params.chi2).max(params.chi_bar2),
        Some(_) => rho,
    }
}

/// Step 4: adapt `ρ` from how far the linearization of `Ψ` crossed zero.
pub fn update_rho(ws: &NewtonWorkspace, b_direction: &[f64], params: &SsnParams) -> f64 {
    rho_after(ws.rho, chi_ratio(&ws.z_hat, b_direction), params)
}

/// Statistics of one Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsnIteration {
    pub cg_approx: usize,
    pub cg_newton: usize,
    /// Accepted line-search exponent; `None` when the iteration stopped
    /// right after the approximation step.
    pub exponent: Option<u32>,
    pub chi: Option<f64>,
    /// `ρ` after the update.
    pub rho: f64,
    pub active: usize,
    /// `ψ(x_{j+1}, z_{j+1}) − ψ(x_j, z_j)`, assembled from the CG model
    /// decrease, the `z` update and the line search. Strictly negative.
    pub psi_decrease: f64,
    /// `ϑ(x_{j+1})`.
    pub theta: f64,
    /// `‖∇ϑ(x_{j+1})‖`.
    pub grad_norm: f64,
    pub cg_capped: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SsnStats {
    pub iterations: Vec<SsnIteration>,
    pub initial_grad_norm: f64,
    pub initial_theta: f64,
    pub total_cg: usize,
    /// Some CG solve hit its iteration cap.
    pub cg_capped: bool,
    /// `x_0, x_1, …` when [`SsnParams::keep_iterates`] is set.
    pub iterates: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct SubproblemOutcome {
    pub x: Vec<f64>,
    /// `Ψ(x)`.
    pub z: Vec<f64>,
    pub grad_norm: f64,
    pub converged: bool,
    /// `ρ` at exit, for warm starts.
    pub rho: f64,
    pub stats: SsnStats,
}

/// Runs the Newton loop from `x0` until `‖∇ₓψ(x_j, z_j)‖ ≤ ε` with
/// `z_j = Ψ(x_j)`, or until `max_iter` iterations (then `converged` is false).
/// `rho` is the initial regularization, typically carried over from the
/// previous subproblem.
pub fn solve_subproblem(
    spec: &SubproblemSpec<'_>,
    x0: &[f64],
    params: &SsnParams,
    rho: f64,
) -> Result<SubproblemOutcome> {
    crate::linops::expect_len("subproblem start", spec.problem.n(), x0.len())?;
    let mut x = x0.to_vec();
    let mut cur = eval_theta(spec, &x);
    let mut grad_norm = vecops::norm2(&cur.grad);
    let mut rho = rho;
    let mut stats = SsnStats {
        initial_grad_norm: grad_norm,
        initial_theta: cur.value,
        ..SsnStats::default()
    };
    if params.keep_iterates {
        stats.iterates.push(x.clone());
    }

    let mut j = 0;
    while grad_norm > params.eps && j < params.max_iter {
        let (mut ws, approx) = approximation_step(spec, &x, &cur.z, &cur.grad, rho, params, j);
        let cap = params.cg_cap(x.len());
        let mut capped = !approx.cg.converged && approx.cg.iterations >= cap;
        let mut it = SsnIteration {
            cg_approx: approx.cg.iterations,
            cg_newton: 0,
            exponent: None,
            chi: None,
            rho,
            active: ws.active_set.len(),
            psi_decrease: approx.model_decrease + approx.z_decrease,
            theta: ws.theta_hat,
            grad_norm: vecops::norm2(&ws.x_hat_star),
            cg_capped: capped,
        };

        if it.grad_norm <= params.eps {
            x = ws.x_hat;
            cur = eval_theta(spec, &x);
        } else {
            let newton = newton_direction(&mut ws, spec, params, j);
            capped |= !newton.converged && newton.iterations >= cap;
            let ls = line_search(spec, &ws, params)?;
            let chi = chi_ratio(&ws.z_hat, &ls.b_direction);
            rho = rho_after(rho, chi, params);
            x = ls.x_next;
            cur = eval_theta(spec, &x);
            it.cg_newton = newton.iterations;
            it.exponent = Some(ls.exponent);
            it.chi = chi;
            it.rho = rho;
            it.psi_decrease += ls.decrease;
            it.theta = cur.value;
            it.grad_norm = vecops::norm2(&cur.grad);
            it.cg_capped = capped;
        }
        grad_norm = it.grad_norm;
        stats.total_cg += it.cg_approx + it.cg_newton;
        stats.cg_capped |= capped;
        stats.iterations.push(it);
        if params.keep_iterates {
            stats.iterates.push(x.clone());
        }
        j += 1;
    }

    Ok(SubproblemOutcome {
        converged: grad_norm <= params.eps,
        x,
        z: cur.z,
        grad_norm,
        rho,
        stats,
    })
}
