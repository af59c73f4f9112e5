use super::{stop_status, Recorder};
use crate::cg::conjugate_gradient;
use crate::linops::expect_len;
use crate::metrics::{Solution, Status};
use crate::prox::prox_l1;
use crate::vecops;
use crate::{Error, Problem, Result};

/// Which `x` the `z`-update reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZUpdate {
    /// `z^{k+1} = prox_{α/σ}(Bx^k + z*^k/σ)`. A Jacobi-type ordering with no
    /// convergence guarantee; on the tomography test problems it diverges for
    /// every penalty tried.
    AsPrinted,
    /// `z^{k+1} = prox_{α/σ}(Bx^{k+1} + z*^k/σ)`, the usual ADMM ordering.
    GaussSeidel,
}

impl std::str::FromStr for ZUpdate {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "as-printed" => Ok(ZUpdate::AsPrinted),
            "gauss-seidel" => Ok(ZUpdate::GaussSeidel),
            other => Err(format!("expected \"as-printed\" or \"gauss-seidel\", got \"{other}\"")),
        }
    }
}

impl std::fmt::Display for ZUpdate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ZUpdate::AsPrinted => "as-printed",
            ZUpdate::GaussSeidel => "gauss-seidel",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmParams {
    /// Defaults to `0.25·λ_max(AᵀA)/λ_max(BᵀB)`.
    pub sigma: Option<f64>,
    pub eps_opt: f64,
    pub max_iter: usize,
    pub cg_tol: f64,
    pub max_cg: Option<usize>,
    pub z_update: ZUpdate,
}

impl Default for AdmmParams {
    fn default() -> Self {
        AdmmParams {
            sigma: None,
            eps_opt: 1e-6,
            max_iter: 20_000,
            cg_tol: 1e-3,
            max_cg: None,
            z_update: ZUpdate::GaussSeidel,
        }
    }
}

impl AdmmParams {
    pub fn penalty(&self, problem: &Problem) -> f64 {
        self.sigma
            .unwrap_or(0.25 * problem.lambda_a() / problem.lambda_b())
    }
}

/// ADMM on the splitting `Bx = z`. Iteration `k` records the residual of
/// `(x^k, z^k, z*^k)`, takes an inexact (CG) `x`-step on the augmented
/// Lagrangian, the `z`-step selected by [`ZUpdate`], and
/// `z*^{k+1} = z*^k + σ(Bx^{k+1} − z^{k+1})`.
pub fn admm(
    problem: &Problem,
    x0: &[f64],
    zstar0: &[f64],
    params: &AdmmParams,
    reference: Option<&[f64]>,
) -> Result<Solution> {
    expect_len("initial x", problem.n(), x0.len())?;
    expect_len("initial multiplier", problem.l(), zstar0.len())?;
    let sigma = params.penalty(problem);
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::config("solver.sigma", "must be positive"));
    }
    if !(params.cg_tol > 0.0 && params.cg_tol < 1.0) {
        return Err(Error::config("solver.cg_tol", "must lie in (0, 1)"));
    }
    let (a, b) = (problem.forward(), problem.regularizer());
    let tau = problem.alpha() / sigma;
    let n = problem.n();
    let max_cg = params.max_cg.unwrap_or(10 * n).max(1);
    let shifted = |bx: &[f64], zs: &[f64]| -> Vec<f64> {
        bx.iter().zip(zs).map(|(p, q)| p + q / sigma).collect()
    };

    let mut x = x0.to_vec();
    let mut bx = b.apply(&x);
    let mut z = prox_l1(&shifted(&bx, zstar0), tau);
    let mut zstar: Vec<f64> = (0..z.len()).map(|i| zstar0[i] + sigma * (bx[i] - z[i])).collect();

    let mut rec = Recorder::new(reference);
    let mut cg_prev = 0;
    let mut k = 0;
    let status = loop {
        let r = problem.residual(&x, &z, &zstar);
        let rel = rec.push(k, sigma, r, &x, &z, 0, cg_prev);
        if let Some(s) = stop_status(rel, params.eps_opt) {
            break s;
        }
        if k >= params.max_iter {
            break Status::MaxIterations;
        }

        let rhs: Vec<f64> = problem
            .lagrangian_grad(&x, &z, &zstar, sigma)
            .iter()
            .map(|g| -g)
            .collect();
        let mut delta = vec![0.0; n];
        let rep = conjugate_gradient(
            |v, o| {
                a.adjoint_into(&a.apply(v), o);
                let bv: Vec<f64> = b.apply(v).iter().map(|u| sigma * u).collect();
                vecops::axpy(1.0, &b.adjoint(&bv), o);
            },
            &rhs,
            &mut delta,
            params.cg_tol,
            max_cg,
            None,
        );
        cg_prev = rep.iterations;
        let z_source = match params.z_update {
            ZUpdate::AsPrinted => shifted(&bx, &zstar),
            ZUpdate::GaussSeidel => Vec::new(),
        };
        vecops::axpy(1.0, &delta, &mut x);
        bx = b.apply(&x);
        z = match params.z_update {
            ZUpdate::AsPrinted => prox_l1(&z_source, tau),
            ZUpdate::GaussSeidel => prox_l1(&shifted(&bx, &zstar), tau),
        };
        for i in 0..z.len() {
            zstar[i] += sigma * (bx[i] - z[i]);
        }
        k += 1;
    };
    Ok(rec.finish(x, z, zstar, status))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{DenseMatrix, Identity, TvDifferenceOp};
    use nalgebra::{DMatrix, DVector};
    use std::sync::Arc;

    fn separable() -> Problem {
        Problem::new(
            Arc::new(DenseMatrix::from_diagonal(&[1.0; 3])),
            Arc::new(TvDifferenceOp::new(1, 3)),
            vec![1.0, 0.0, 2.0],
            0.2,
        )
        .unwrap()
    }

    /// Straightforward ADMM with a direct linear solve.
    fn reference_admm(p: &Problem, sigma: f64, iters: usize, gauss_seidel: bool) -> Vec<Vec<f64>> {
        let bmat = DenseMatrix::assemble(p.regularizer());
        let bm = DMatrix::from_fn(bmat.rows(), bmat.cols(), |r, c| bmat.get(r, c));
        let amat = DenseMatrix::assemble(p.forward());
        let am = DMatrix::from_fn(amat.rows(), amat.cols(), |r, c| amat.get(r, c));
        let data = DVector::from_vec(p.data().to_vec());
        let h = am.transpose() * &am + sigma * bm.transpose() * &bm;
        let soft = |v: f64, t: f64| v.signum() * (v.abs() - t).max(0.0);
        let t = p.alpha() / sigma;
        let mut x = DVector::zeros(p.n());
        let mut zs = DVector::zeros(p.l());
        let mut z = (&bm * &x + &zs / sigma).map(|v| soft(v, t));
        zs += sigma * (&bm * &x - &z);
        let mut out = vec![x.as_slice().to_vec()];
        for _ in 0..iters {
            let x_old = x.clone();
            // argmin_x ½‖Ax − b‖² + ⟨z*, Bx − z⟩ + σ/2‖Bx − z‖²
            let rhs = am.transpose() * &data + bm.transpose() * (sigma * &z - &zs);
            x = h.clone().lu().solve(&rhs).unwrap();
            let src = if gauss_seidel { &x } else { &x_old };
            z = (&bm * src + &zs / sigma).map(|v| soft(v, t));
            zs += sigma * (&bm * &x - &z);
            out.push(x.as_slice().to_vec());
        }
        out
    }

    #[test]
    fn matches_hand_rolled_admm() {
        let p = separable();
        for (mode, gs) in [(ZUpdate::AsPrinted, false), (ZUpdate::GaussSeidel, true)] {
            let sigma = 0.7;
            let oracle = reference_admm(&p, sigma, 4, gs);
            for (k, expect) in oracle.iter().enumerate().skip(1) {
                let params = AdmmParams {
                    sigma: Some(sigma),
                    eps_opt: 0.0,
                    max_iter: k,
                    cg_tol: 1e-15,
                    max_cg: Some(100),
                    z_update: mode,
                };
                let sol = admm(&p, &[0.0; 3], &[0.0; 2], &params, None).unwrap();
                for (u, v) in sol.x.iter().zip(expect) {
                    assert!((u - v).abs() < 1e-10, "{mode} k={k}: {u} vs {v}");
                }
            }
        }
    }

    #[test]
    fn initialization_applies_prox_then_multiplier_update() {
        let p = separable();
        let params = AdmmParams {
            sigma: Some(2.0),
            max_iter: 0,
            ..AdmmParams::default()
        };
        let x0 = [0.0, 1.0, 1.5];
        let zs0 = [0.3, -0.1];
        let sol = admm(&p, &x0, &zs0, &params, None).unwrap();
        let bx = p.regularizer().apply(&x0);
        let w: Vec<f64> = bx.iter().zip(&zs0).map(|(a, b)| a + b / 2.0).collect();
        let z = prox_l1(&w, p.alpha() / 2.0);
        assert_eq!(sol.z, z);
        for i in 0..2 {
            assert!((sol.zstar[i] - (zs0[i] + 2.0 * (bx[i] - z[i]))).abs() < 1e-15);
        }
    }

    #[test]
    fn gauss_seidel_multiplier_stays_in_ball() {
        let a = Identity(16);
        let data: Vec<f64> = (0..16).map(|i| if (i % 4) < 2 { 1.0 } else { 0.0 }).collect();
        let p = Problem::new(Arc::new(a), Arc::new(TvDifferenceOp::new(4, 4)), data, 0.1).unwrap();
        let params = AdmmParams {
            z_update: ZUpdate::GaussSeidel,
            max_iter: 50,
            eps_opt: 0.0,
            ..AdmmParams::default()
        };
        let sol = admm(&p, &[0.0; 16], &[0.0; 24], &params, None).unwrap();
        assert!(vecops::norm_inf(&sol.zstar) <= p.alpha() * (1.0 + 1e-12));
    }

    #[test]
    fn flag_parses() {
        assert_eq!("as-printed".parse::<ZUpdate>().unwrap(), ZUpdate::AsPrinted);
        assert_eq!("gauss-seidel".parse::<ZUpdate>().unwrap(), ZUpdate::GaussSeidel);
        assert!("jacobi".parse::<ZUpdate>().is_err());
    }
}
