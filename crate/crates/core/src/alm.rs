//! Inexact augmented Lagrangian method for `min ½‖Ax − b‖² + α‖Bx‖₁`,
//! written as `min ½‖Ax − b‖² + α‖z‖₁` subject to `Bx = z`.
//!
//! Each outer iteration minimizes the augmented Lagrangian in `(x, z)` with
//! the semismooth* Newton method of [`crate::subproblem`], updates the
//! multiplier, and raises the penalty `σ` whenever the constraint violation
//! fails to contract by the factor `β`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::metrics::{active_count, errors_vs_reference, IterationRecord, Solution, Status, Stopwatch};
use crate::prox::prox_l1;
use crate::subproblem::{solve_subproblem, SsnParams, SubproblemSpec};
use crate::vecops;
use crate::{Error, LinearMap, Problem, Result};

/// Penalty growth factors `γ_l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSchedule {
    /// `γ_l = c/(c + l)`.
    Harmonic(f64),
    Constant(f64),
}

impl GammaSchedule {
    pub fn at(&self, l: usize) -> f64 {
        match *self {
            GammaSchedule::Harmonic(c) => c / (c + l as f64),
            GammaSchedule::Constant(g) => g,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AlmParams {
    pub beta: f64,
    pub gamma: GammaSchedule,
    /// Overrides `σ⁰ = 10·λ_max(AᵀA)/λ_max(BᵀB)`.
    pub sigma0: Option<f64>,
    pub eps_opt: f64,
    pub max_outer: usize,
    pub ssn: SsnParams,
}

impl Default for AlmParams {
    fn default() -> Self {
        AlmParams {
            beta: 0.5,
            gamma: GammaSchedule::Harmonic(5.0),
            sigma0: None,
            eps_opt: 1e-9,
            max_outer: 200,
            ssn: SsnParams::default(),
        }
    }
}

impl AlmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::config("solver.beta", "must lie in (0, 1)"));
        }
        let gamma_ok = match self.gamma {
            GammaSchedule::Harmonic(c) => c > 0.0 && c.is_finite(),
            GammaSchedule::Constant(g) => g > 0.0 && g.is_finite(),
        };
        if !gamma_ok {
            return Err(Error::config("solver.gamma", "must be positive"));
        }
        if let Some(s) = self.sigma0 {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::config("solver.sigma0", "must be positive"));
            }
        }
        if !(self.eps_opt > 0.0) {
            return Err(Error::config("solver.eps_opt", "must be positive"));
        }
        if self.max_outer == 0 {
            return Err(Error::config("solver.max_outer", "must be at least 1"));
        }
        self.ssn.validate()
    }
}

/// `10·λ_max(AᵀA)/λ_max(BᵀB)`.
pub fn default_sigma0(lambda_a: f64, lambda_b: f64) -> f64 {
    10.0 * lambda_a / lambda_b
}

#[derive(Debug, Clone)]
pub struct AlmState {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub zeta_star: Vec<f64>,
    pub sigma: f64,
    /// Number of penalty increases so far.
    pub l: usize,
    /// Newton regularization carried into the next subproblem.
    pub rho: f64,
    pub k: usize,
    /// `‖∇ₓL_{σ⁰}(x⁰, z⁰, ζ*⁰)‖`.
    pub initial_grad_norm: f64,
    /// `‖Bx^k − z^k‖`.
    pub feasibility: f64,
}

/// Multiplier `ζ* + σ(Bx − z)` for `z = prox_{α/σ}(w)`, `w = Bx + ζ*/σ`,
/// written so that it lies in `∂α‖z‖₁` exactly: `α·sign(zᵢ)` where `zᵢ ≠ 0`
/// and `σwᵢ` clipped to `[−α, α]` elsewhere.
fn multiplier(z: &[f64], w: &[f64], sigma: f64, alpha: f64) -> Vec<f64> {
    let mut out = vec![0.0; z.len()];
    vecops::fill_with(&mut out, |i| {
        if z[i] != 0.0 {
            alpha * z[i].signum()
        } else {
            (sigma * w[i]).clamp(-alpha, alpha)
        }
    });
    out
}

fn shifted(bx: &[f64], zeta: &[f64], sigma: f64) -> Vec<f64> {
    let mut w = vec![0.0; bx.len()];
    vecops::fill_with(&mut w, |i| bx[i] + zeta[i] / sigma);
    w
}

/// `σ⁰`, `z⁰ = prox_{α/σ⁰}(Bx⁰ + ζ*⁰/σ⁰)` and `ζ*⁰ ← ζ*⁰ + σ⁰(Bx⁰ − z⁰)`.
pub fn init_state(problem: &Problem, x0: &[f64], zeta0: &[f64], params: &AlmParams) -> Result<AlmState> {
    crate::linops::expect_len("initial x", problem.n(), x0.len())?;
    crate::linops::expect_len("initial multiplier", problem.l(), zeta0.len())?;
    if !(problem.lambda_b() > 0.0) {
        return Err(Error::config(
            "problem.regularizer",
            "λ_max(BᵀB) is zero; the regularizer is empty",
        ));
    }
    if !(problem.lambda_a() > 0.0) {
        return Err(Error::config("problem.operator", "λ_max(AᵀA) is zero"));
    }
    let sigma = params
        .sigma0
        .unwrap_or_else(|| default_sigma0(problem.lambda_a(), problem.lambda_b()));
    let alpha = problem.alpha();
    let bx = problem.regularizer().apply(x0);
    let w = shifted(&bx, zeta0, sigma);
    let z = prox_l1(&w, alpha / sigma);
    let zeta_star = multiplier(&z, &w, sigma, alpha);
    let initial_grad_norm = vecops::norm2(&problem.lagrangian_grad(x0, &z, &zeta_star, sigma));
    let feasibility = vecops::dist2(&bx, &z);
    Ok(AlmState {
        x: x0.to_vec(),
        z,
        zeta_star,
        sigma,
        l: 0,
        rho: params.ssn.rho0,
        k: 0,
        initial_grad_norm,
        feasibility,
    })
}

/// First-order residual `r^k` of the current triple.
pub fn residual(state: &AlmState, problem: &Problem) -> f64 {
    problem.residual(&state.x, &state.z, &state.zeta_star)
}

/// Inner work spent by one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub inner_iters: usize,
    pub cg_iters: usize,
    /// Subproblem tolerance `ε^k`.
    pub tolerance: f64,
    pub inner_converged: bool,
    pub sigma_increased: bool,
}

/// One outer iteration: solve the subproblem to `ε^k`, update `ζ*`, and
/// possibly increase `σ`.
pub fn alm_step(state: &mut AlmState, problem: &Problem, params: &AlmParams) -> Result<StepReport> {
    let sigma = state.sigma;
    let grad_k = problem.lagrangian_grad(&state.x, &state.z, &state.zeta_star, sigma);
    let tolerance = (0.5f64.powi(state.k as i32 + 1) * state.initial_grad_norm)
        .min(0.1 * vecops::norm2(&grad_k));
    let spec = SubproblemSpec::new(problem, sigma, &state.zeta_star)?;
    let ssn = SsnParams {
        eps: tolerance,
        ..params.ssn.clone()
    };
    let out = solve_subproblem(&spec, &state.x, &ssn, state.rho)?;

    let bx = problem.regularizer().apply(&out.x);
    let w = shifted(&bx, &state.zeta_star, sigma);
    let zeta_star = multiplier(&out.z, &w, sigma, problem.alpha());
    let feasibility = vecops::dist2(&bx, &out.z);
    let sigma_increased = feasibility > params.beta * state.feasibility;
    if sigma_increased {
        state.sigma = sigma * (1.0 + params.gamma.at(state.l));
        state.l += 1;
    }
    state.x = out.x;
    state.z = out.z;
    state.zeta_star = zeta_star;
    state.feasibility = feasibility;
    state.rho = out.rho;
    state.k += 1;
    Ok(StepReport {
        inner_iters: out.stats.iterations.len(),
        cg_iters: out.stats.total_cg,
        tolerance,
        inner_converged: out.converged,
        sigma_increased,
    })
}

/// Runs ALM from `(x0, ζ*0)` until `r^k ≤ ε_Opt·r⁰` or `max_outer`
/// iterations. With a `reference` the records carry `err₂` and `err∞`.
pub fn solve(
    problem: &Problem,
    x0: &[f64],
    zeta0: &[f64],
    params: &AlmParams,
    reference: Option<&[f64]>,
) -> Result<Solution> {
    params.validate()?;
    let clock = Stopwatch::start();
    let mut state = init_state(problem, x0, zeta0, params)?;
    let r0 = residual(&state, problem);
    let record = |state: &AlmState, r: f64, inner: usize, cg: usize, clock: &Stopwatch| {
        let (err2, err_inf) = reference.map_or((None, None), |x_ref| errors_vs_reference(&state.x, x_ref));
        IterationRecord {
            k: state.k,
            sigma: state.sigma,
            rel_residual: if r0 > 0.0 { r / r0 } else { 0.0 },
            err2,
            err_inf,
            time_s: clock.seconds(),
            inner_iters: inner,
            cg_iters: cg,
            active_count: active_count(&state.z),
        }
    };
    let mut records = vec![record(&state, r0, 0, 0, &clock)];
    let mut total_cg = 0;
    let mut r = r0;
    let status = loop {
        if r <= params.eps_opt * r0 {
            break Status::Converged;
        }
        if !r.is_finite() {
            break Status::Diverged;
        }
        if state.k >= params.max_outer {
            break Status::MaxIterations;
        }
        let step = alm_step(&mut state, problem, params)?;
        total_cg += step.cg_iters;
        r = residual(&state, problem);
        records.push(record(&state, r, step.inner_iters, step.cg_iters, &clock));
    };
    Ok(Solution {
        x: state.x,
        z: state.z,
        zstar: state.zeta_star,
        status,
        r0,
        records,
        total_cg,
        elapsed_s: clock.seconds(),
    })
}

/// Discrepancy-based regularization parameter
/// `α = δ·(Σ‖Aᵀbᵢ‖/‖bᵢ‖) / (Σ‖Bᵀzᵢ‖/‖zᵢ‖∞)` with `t` standard normal `bᵢ`
/// and `t` vectors `zᵢ` uniform on `[−0.5, 0.5]`, drawn in that order from
/// `seed`.
pub fn auto_alpha(a: &dyn LinearMap, b: &dyn LinearMap, delta: f64, t: usize, seed: u64) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::config(
            "delta",
            format!("must be positive for the automatic choice of alpha, got {delta}"),
        ));
    }
    if t == 0 {
        return Err(Error::config("problem.alpha_samples", "must be at least 1"));
    }
    crate::linops::expect_len("regularizer domain", a.domain_dim(), b.domain_dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut numerator = 0.0;
    for _ in 0..t {
        let bi: Vec<f64> = (0..a.range_dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
        numerator += vecops::norm2(&a.adjoint(&bi)) / vecops::norm2(&bi);
    }
    let uniform = Uniform::new(-0.5, 0.5).expect("valid range");
    let mut denominator = 0.0;
    for _ in 0..t {
        let zi: Vec<f64> = (0..b.range_dim()).map(|_| uniform.sample(&mut rng)).collect();
        denominator += vecops::norm2(&b.adjoint(&zi)) / vecops::norm_inf(&zi);
    }
    let alpha = delta * numerator / denominator;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::config("alpha", format!("automatic choice produced {alpha}")));
    }
    Ok(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{blur_operator, binomial_kernel, DenseMatrix, Diagonal, Identity, TvDifferenceOp};
    use crate::problems::{phantom_piecewise, Shape};
    use crate::prox::l1_subgradient_residual;
    use std::sync::Arc;

    fn blur_problem(n: usize, alpha: f64) -> (Problem, Vec<f64>) {
        let a = blur_operator(n, n, 1, &binomial_kernel(1)).unwrap();
        let truth = phantom_piecewise(n, n, &[Shape::disk(0.5, 0.5, 0.3, 1.0)], 0.0);
        let b = a.apply(truth.values());
        let p = Problem::new(Arc::new(a), Arc::new(TvDifferenceOp::new(n, n)), b, alpha).unwrap();
        (p, truth.into_values())
    }

    #[test]
    fn zero_start_stays_zero() {
        let (p, _) = blur_problem(6, 0.05);
        let s = init_state(&p, &vec![0.0; 36], &vec![0.0; p.l()], &AlmParams::default()).unwrap();
        assert!(s.z.iter().all(|&v| v == 0.0));
        assert!(s.zeta_star.iter().all(|&v| v == 0.0));
        let r = residual(&s, &p);
        let atb = vecops::norm2(&p.forward().adjoint(p.data()));
        assert!((r - atb).abs() < 1e-12 * atb);
    }

    #[test]
    fn sigma0_formula() {
        assert_eq!(default_sigma0(4.0, 8.0), 5.0);
        let p = Problem::with_spectrum(
            Arc::new(Identity(4)),
            Arc::new(TvDifferenceOp::new(2, 2)),
            vec![1.0; 4],
            0.1,
            4.0,
            8.0,
        )
        .unwrap();
        let s = init_state(&p, &[0.0; 4], &[0.0; 4], &AlmParams::default()).unwrap();
        assert_eq!(s.sigma, 5.0);
    }

    #[test]
    fn init_multiplier_is_a_subgradient() {
        let (p, _) = blur_problem(6, 0.05);
        let x0: Vec<f64> = (0..36).map(|i| (i as f64 * 0.37).sin()).collect();
        let zeta0: Vec<f64> = (0..p.l()).map(|i| (i as f64 * 0.11).cos()).collect();
        let s = init_state(&p, &x0, &zeta0, &AlmParams::default()).unwrap();
        assert_eq!(l1_subgradient_residual(&s.z, &s.zeta_star, p.alpha()), 0.0);
    }

    #[test]
    fn empty_regularizer_is_a_config_error() {
        let p = Problem::new(
            Arc::new(Identity(3)),
            Arc::new(Diagonal(vec![0.0; 3])),
            vec![1.0; 3],
            0.1,
        )
        .unwrap();
        assert!(matches!(
            init_state(&p, &[0.0; 3], &[0.0; 3], &AlmParams::default()),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn zero_data_terminates_at_once() {
        let a = blur_operator(5, 5, 1, &binomial_kernel(1)).unwrap();
        let p = Problem::new(Arc::new(a), Arc::new(TvDifferenceOp::new(5, 5)), vec![0.0; 25], 0.1)
            .unwrap();
        let sol = solve(&p, &[0.0; 25], &vec![0.0; p.l()], &AlmParams::default(), None).unwrap();
        assert_eq!(sol.status, Status::Converged);
        assert_eq!(sol.r0, 0.0);
        assert_eq!(sol.records.len(), 1);
        assert_eq!(sol.records[0].rel_residual, 0.0);
    }

    #[test]
    fn gamma_schedule_doubles_first() {
        let g = GammaSchedule::Harmonic(5.0);
        assert_eq!(1.0 + g.at(0), 2.0);
        assert!((g.at(5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn steps_keep_multiplier_in_subdifferential() {
        let (p, _) = blur_problem(8, 0.02);
        let params = AlmParams::default();
        let mut s = init_state(&p, &vec![0.0; 64], &vec![0.0; p.l()], &params).unwrap();
        let mut last_sigma = s.sigma;
        for _ in 0..5 {
            let prev_feas = s.feasibility;
            let prev_sigma = s.sigma;
            let prev_l = s.l;
            let rep = alm_step(&mut s, &p, &params).unwrap();
            assert!(rep.inner_converged);
            assert!(l1_subgradient_residual(&s.z, &s.zeta_star, p.alpha()) <= 1e-12);
            assert!(vecops::norm_inf(&s.zeta_star) <= p.alpha());
            // z = prox of the shifted point for the σ that was used
            if s.feasibility <= params.beta * prev_feas {
                assert_eq!(s.sigma, prev_sigma);
                assert_eq!(s.l, prev_l);
            } else {
                assert_eq!(s.sigma, prev_sigma * (1.0 + params.gamma.at(prev_l)));
                assert_eq!(s.l, prev_l + 1);
            }
            assert!(s.sigma >= last_sigma);
            last_sigma = s.sigma;
        }
    }

    #[test]
    fn solve_blur_to_tolerance() {
        let (p, _) = blur_problem(12, 0.01);
        let params = AlmParams {
            eps_opt: 1e-8,
            ..AlmParams::default()
        };
        let sol = solve(&p, &vec![0.0; 144], &vec![0.0; p.l()], &params, None).unwrap();
        assert_eq!(sol.status, Status::Converged);
        let last = sol.records.last().unwrap();
        assert!(last.rel_residual <= 1e-8);
        assert_eq!(sol.records[0].rel_residual, 1.0);
        for (i, r) in sol.records.iter().enumerate() {
            assert_eq!(r.k, i);
        }
        let cg: usize = sol.records.iter().map(|r| r.cg_iters).sum();
        assert_eq!(cg, sol.total_cg);
        assert!(l1_subgradient_residual(&sol.z, &sol.zstar, p.alpha()) <= 1e-12);
    }

    #[test]
    fn auto_alpha_matches_independent_formula() {
        let a = DenseMatrix::from_diagonal(&[2.0, 2.0, 2.0, 2.0]);
        let b = DenseMatrix::from_diagonal(&[2.0, 2.0, 2.0, 2.0]);
        let alpha = auto_alpha(&a, &b, 0.03, 10, 5).unwrap();
        assert_eq!(alpha.to_bits(), auto_alpha(&a, &b, 0.03, 10, 5).unwrap().to_bits());

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut num = 0.0;
        for _ in 0..10 {
            let v: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            num += 2.0 * n / n;
        }
        let u = Uniform::new(-0.5, 0.5).unwrap();
        let mut den = 0.0;
        for _ in 0..10 {
            let v: Vec<f64> = (0..4).map(|_| u.sample(&mut rng)).collect();
            let n2: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let ninf = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            den += 2.0 * n2 / ninf;
        }
        let want = 0.03 * num / den;
        assert!((alpha - want).abs() <= 1e-14 * want);
        assert!(auto_alpha(&a, &b, 0.0, 10, 5).is_err());
    }
}
