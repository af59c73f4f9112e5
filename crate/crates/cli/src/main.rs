mod config;
mod run;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toml::Value;
use tvnewton::problems::make_problem;
use tvnewton::Status;

use config::{load, parse_value, write_resolved, RunConfig, SolverKind};
use run::{describe, load_reference, run_solver, write_log, write_reconstruction};

const EXIT_CONVERGED: u8 = 0;
const EXIT_CONFIG: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_SOLVER_FAILURE: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Unusable setting; `key` is the config key or flag at fault.
    Config { key: String, reason: String },
    Core(tvnewton::Error),
    Other(String),
}

impl CliError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(tvnewton::Error::LineSearch { .. }) => EXIT_SOLVER_FAILURE,
            _ => EXIT_CONFIG,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { key, reason } => write!(f, "invalid configuration for `{key}`: {reason}"),
            CliError::Core(e) => e.fmt(f),
            CliError::Other(s) => f.write_str(s),
        }
    }
}

impl From<tvnewton::Error> for CliError {
    fn from(e: tvnewton::Error) -> Self {
        match e {
            tvnewton::Error::Config { key, reason } => CliError::Config { key, reason },
            e => CliError::Core(e),
        }
    }
}

/// Total-variation regularized least squares by augmented Lagrangian and
/// semismooth Newton, with first-order baselines.
#[derive(Parser)]
#[command(name = "tvnewton", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem with one solver.
    Solve(CommonArgs),
    /// Compute a tight ALM reference, then run every listed solver against it.
    Compare(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML file with [problem], [solver], [output] and [compare] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    solver: Option<SolverKind>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// A number or "auto".
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    eps_opt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_outer: Option<usize>,
    /// Generic override `section.key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl CommonArgs {
    /// Overrides in application order: `--set` first, then dedicated flags.
    fn overrides(&self) -> Result<Vec<(String, Value)>, CliError> {
        let mut out = Vec::new();
        for item in &self.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::config(item.as_str(), "expected --set section.key=value"))?;
            out.push((k.trim().to_string(), parse_value(v.trim())));
        }
        if let Some(s) = self.solver {
            out.push(("solver.name".into(), Value::String(s.as_str().into())));
        }
        if let Some(d) = &self.out {
            out.push(("output.dir".into(), Value::String(d.display().to_string())));
        }
        if let Some(a) = &self.alpha {
            out.push(("problem.alpha".into(), parse_value(a)));
        }
        if let Some(e) = self.eps_opt {
            out.push(("solver.eps_opt".into(), Value::Float(e)));
        }
        if let Some(s) = self.seed {
            let s = i64::try_from(s).map_err(|_| CliError::config("--seed", "too large"))?;
            out.push(("problem.seed".into(), Value::Integer(s)));
        }
        if let Some(m) = self.max_outer {
            let m = i64::try_from(m).map_err(|_| CliError::config("--max-outer", "too large"))?;
            out.push(("solver.max_outer".into(), Value::Integer(m)));
        }
        Ok(out)
    }

    fn load(&self) -> Result<RunConfig, CliError> {
        load(self.config.as_deref(), &self.overrides()?)
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("TVNEWTON_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config("TVNEWTON_THREADS", format!("expected a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Other(format!("thread pool: {e}")))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::config("output.dir", format!("{}: {e}", dir.display())))
}

fn cmd_solve(args: &CommonArgs) -> Result<u8, CliError> {
    let cfg = args.load()?;
    let gen = make_problem(&cfg.problem)?;
    let reference = match &cfg.solver.reference {
        Some(p) => Some(load_reference(p, gen.problem.n())?),
        None => None,
    };
    let dir = &cfg.output.dir.clone();
    create_dir(dir)?;
    let kind = cfg.solver.name;
    let (sol, used) = run_solver(kind, &gen.problem, &cfg.solver, reference.as_deref())?;
    write_reconstruction(&gen, &sol.x, dir, "recon")?;
    write_log(&sol, &dir.join("log.csv"))?;
    let resolved = RunConfig {
        problem: gen.resolved.clone(),
        solver: used,
        ..cfg
    };
    write_resolved(&resolved, &dir.join("resolved-config"))?;
    println!("{}", describe(kind, &sol));
    Ok(if sol.status.is_converged() {
        EXIT_CONVERGED
    } else {
        EXIT_NOT_CONVERGED
    })
}

struct SummaryRow {
    solver: String,
    status: String,
    rel_residual: Option<f64>,
    err2: Option<f64>,
    err_inf: Option<f64>,
    time_s: Option<f64>,
    cg_iters: Option<usize>,
    message: String,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<(), CliError> {
    let fail = |e: csv::Error| CliError::Other(format!("writing {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    w.write_record([
        "solver",
        "status",
        "rel_residual",
        "err2",
        "err_inf",
        "time_s",
        "cg_iters",
        "message",
    ])
    .map_err(fail)?;
    for r in rows {
        w.write_record([
            r.solver.clone(),
            r.status.clone(),
            opt(r.rel_residual.map(|v| format!("{v:e}"))),
            opt(r.err2.map(|v| format!("{v:e}"))),
            opt(r.err_inf.map(|v| format!("{v:e}"))),
            opt(r.time_s.map(|v| format!("{v:e}"))),
            opt(r.cg_iters),
            r.message.clone(),
        ])
        .map_err(fail)?;
    }
    w.flush()
        .map_err(|e| CliError::Other(format!("writing {}: {e}", path.display())))
}

fn cmd_compare(args: &CommonArgs) -> Result<u8, CliError> {
    let cfg = args.load()?;
    let mut seen = Vec::new();
    for s in &cfg.compare.solvers {
        if seen.contains(s) {
            return Err(CliError::config("compare.solvers", format!("{s} is listed twice")));
        }
        seen.push(*s);
    }
    let gen = make_problem(&cfg.problem)?;
    let dir = &cfg.output.dir.clone();
    create_dir(dir)?;
    let mut all_converged = true;

    let mut ref_cfg = cfg.solver.clone();
    ref_cfg.eps_opt = Some(cfg.compare.reference_eps_opt);
    let reference = match run_solver(SolverKind::Alm, &gen.problem, &ref_cfg, None) {
        Ok((sol, _)) => {
            println!("reference {}", describe(SolverKind::Alm, &sol));
            write_log(&sol, &dir.join("log-reference.csv"))?;
            write_reconstruction(&gen, &sol.x, dir, "reference")?;
            all_converged &= sol.status.is_converged();
            Some(sol.x)
        }
        Err(e) => {
            eprintln!("reference run failed: {e}; error columns will be empty");
            all_converged = false;
            None
        }
    };

    let mut rows = Vec::new();
    for &kind in &cfg.compare.solvers {
        let mut scfg = cfg.solver.clone();
        scfg.eps_opt = Some(cfg.compare.tolerance(kind));
        match run_solver(kind, &gen.problem, &scfg, reference.as_deref()) {
            Ok((sol, _)) => {
                println!("{}", describe(kind, &sol));
                write_log(&sol, &dir.join(format!("log-{kind}.csv")))?;
                let last = sol.records.last();
                all_converged &= sol.status.is_converged();
                rows.push(SummaryRow {
                    solver: kind.to_string(),
                    status: status_name(sol.status).into(),
                    rel_residual: sol.final_rel_residual(),
                    err2: last.and_then(|r| r.err2),
                    err_inf: last.and_then(|r| r.err_inf),
                    time_s: Some(sol.elapsed_s),
                    cg_iters: Some(sol.total_cg),
                    message: String::new(),
                });
            }
            Err(e) => {
                eprintln!("{kind} failed: {e}");
                all_converged = false;
                rows.push(SummaryRow {
                    solver: kind.to_string(),
                    status: "failed".into(),
                    rel_residual: None,
                    err2: None,
                    err_inf: None,
                    time_s: None,
                    cg_iters: None,
                    message: e.to_string(),
                });
            }
        }
    }
    // failed runs have no time and sort last
    rows.sort_by(|a, b| {
        a.time_s
            .unwrap_or(f64::INFINITY)
            .total_cmp(&b.time_s.unwrap_or(f64::INFINITY))
    });
    write_summary(&rows, &dir.join("summary.csv"))?;
    // solver defaults are recomputed per solver, so [solver] is kept as given
    let resolved = RunConfig {
        problem: gen.resolved.clone(),
        ..cfg
    };
    write_resolved(&resolved, &dir.join("resolved-config"))?;
    Ok(if all_converged {
        EXIT_CONVERGED
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Converged => "converged",
        Status::MaxIterations => "max-iterations",
        Status::Diverged => "diverged",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Compare(a) => cmd_compare(a),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
