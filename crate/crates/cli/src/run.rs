use std::path::Path;

use tvnewton::alm::{self, default_sigma0, AlmParams, GammaSchedule};
use tvnewton::baselines::{admm, chambolle_pock, smoothed_bb, AdmmParams, BbParams, CpParams};
use tvnewton::metrics::write_run_log;
use tvnewton::problems::GeneratedProblem;
use tvnewton::{ImageGrid, Problem, Solution};

use crate::config::{SolverConfig, SolverKind};
use crate::CliError;

/// Runs `kind` from zero and returns the solution together with `cfg` with
/// every setting the solver used filled in.
pub fn run_solver(
    kind: SolverKind,
    problem: &Problem,
    cfg: &SolverConfig,
    reference: Option<&[f64]>,
) -> Result<(Solution, SolverConfig), CliError> {
    let x0 = vec![0.0; problem.n()];
    let zs0 = vec![0.0; problem.l()];
    let n = problem.n();
    let mut used = cfg.clone();
    used.name = kind;
    let sol = match kind {
        SolverKind::Alm => {
            let d = AlmParams::default();
            let mut p = AlmParams {
                beta: cfg.beta.unwrap_or(d.beta),
                gamma: cfg.gamma.map_or(d.gamma, GammaSchedule::Harmonic),
                sigma0: Some(
                    cfg.sigma0
                        .unwrap_or_else(|| default_sigma0(problem.lambda_a(), problem.lambda_b())),
                ),
                eps_opt: cfg.eps_opt.unwrap_or(d.eps_opt),
                max_outer: cfg.max_outer.unwrap_or(d.max_outer),
                ssn: d.ssn,
            };
            p.ssn.nu = cfg.nu.unwrap_or(p.ssn.nu);
            p.ssn.rho0 = cfg.rho0.unwrap_or(p.ssn.rho0);
            p.ssn.eps = cfg.inner_eps.unwrap_or(p.ssn.eps);
            p.ssn.max_iter = cfg.inner_max_iter.unwrap_or(p.ssn.max_iter);
            p.ssn.max_cg = Some(cfg.max_cg.unwrap_or(10 * n));
            used.beta = Some(p.beta);
            used.gamma = Some(match p.gamma {
                GammaSchedule::Harmonic(c) => c,
                GammaSchedule::Constant(_) => unreachable!("the config only expresses harmonic schedules"),
            });
            used.sigma0 = p.sigma0;
            used.eps_opt = Some(p.eps_opt);
            used.max_outer = Some(p.max_outer);
            used.nu = Some(p.ssn.nu);
            used.rho0 = Some(p.ssn.rho0);
            used.inner_eps = Some(p.ssn.eps);
            used.inner_max_iter = Some(p.ssn.max_iter);
            used.max_cg = p.ssn.max_cg;
            alm::solve(problem, &x0, &zs0, &p, reference)?
        }
        SolverKind::ChambollePock => {
            let d = CpParams::default();
            let mut p = CpParams {
                tau: cfg.tau,
                sigma: cfg.sigma,
                theta: cfg.theta.unwrap_or(d.theta),
                eps_opt: cfg.eps_opt.unwrap_or(d.eps_opt),
                max_iter: cfg.max_outer.unwrap_or(d.max_iter),
                cg_tol: cfg.cg_tol.unwrap_or(d.cg_tol),
                max_cg: Some(cfg.max_cg.unwrap_or(10 * n)),
            };
            let (tau, sigma) = p.steps(problem);
            p.tau = Some(tau);
            p.sigma = Some(sigma);
            used.tau = p.tau;
            used.sigma = p.sigma;
            used.theta = Some(p.theta);
            used.eps_opt = Some(p.eps_opt);
            used.max_outer = Some(p.max_iter);
            used.cg_tol = Some(p.cg_tol);
            used.max_cg = p.max_cg;
            chambolle_pock(problem, &x0, &zs0, &p, reference)?
        }
        SolverKind::Admm => {
            let d = AdmmParams::default();
            let mut p = AdmmParams {
                sigma: cfg.sigma,
                eps_opt: cfg.eps_opt.unwrap_or(d.eps_opt),
                max_iter: cfg.max_outer.unwrap_or(d.max_iter),
                cg_tol: cfg.cg_tol.unwrap_or(d.cg_tol),
                max_cg: Some(cfg.max_cg.unwrap_or(10 * n)),
                z_update: cfg.z_update.map_or(d.z_update, Into::into),
            };
            p.sigma = Some(p.penalty(problem));
            used.sigma = p.sigma;
            used.eps_opt = Some(p.eps_opt);
            used.max_outer = Some(p.max_iter);
            used.cg_tol = Some(p.cg_tol);
            used.max_cg = p.max_cg;
            used.z_update = Some(p.z_update.into());
            admm(problem, &x0, &zs0, &p, reference)?
        }
        SolverKind::SmoothedBb => {
            let d = BbParams::default();
            let p = BbParams {
                epsilon_smooth: cfg.epsilon_smooth.unwrap_or(d.epsilon_smooth),
                eps_opt: cfg.eps_opt.unwrap_or(d.eps_opt),
                max_iter: cfg.max_outer.unwrap_or(d.max_iter),
                tau0: Some(cfg.tau0.unwrap_or(1.0 / problem.lambda_a())),
            };
            used.epsilon_smooth = Some(p.epsilon_smooth);
            used.eps_opt = Some(p.eps_opt);
            used.max_outer = Some(p.max_iter);
            used.tau0 = p.tau0;
            smoothed_bb(problem, &x0, &p, reference)?
        }
    };
    Ok((sol, used))
}

/// Loads a reference reconstruction and checks its size against the problem.
pub fn load_reference(path: &Path, n: usize) -> Result<Vec<f64>, CliError> {
    let img = ImageGrid::read_csv(path).map_err(|e| CliError::config("solver.reference", e.to_string()))?;
    if img.len() != n {
        return Err(CliError::config(
            "solver.reference",
            format!("{} has {} values, the problem has {n} unknowns", path.display(), img.len()),
        ));
    }
    Ok(img.into_values())
}

pub fn write_reconstruction(gen: &GeneratedProblem, x: &[f64], dir: &Path, stem: &str) -> Result<(), CliError> {
    let img = ImageGrid::new(gen.n_row, gen.n_col, x.to_vec())?;
    img.write_csv(dir.join(format!("{stem}.csv")))?;
    img.write_pgm16(dir.join(format!("{stem}.pgm")))?;
    Ok(())
}

pub fn write_log(sol: &Solution, path: &Path) -> Result<(), CliError> {
    write_run_log(&sol.records, path)?;
    Ok(())
}

pub fn describe(kind: SolverKind, sol: &Solution) -> String {
    let last = sol.records.last();
    let mut s = format!(
        "{kind}: {:?} after {} iterations, r/r0 = {:e}, {:.3} s, {} CG iterations",
        sol.status,
        sol.iterations(),
        sol.final_rel_residual().unwrap_or(f64::NAN),
        sol.elapsed_s,
        sol.total_cg
    );
    if let Some(e) = last.and_then(|r| r.err2) {
        s.push_str(&format!(", err2 = {e:e}"));
    }
    s
}
