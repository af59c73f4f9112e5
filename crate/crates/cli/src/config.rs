//! Run configuration: a TOML file with `[problem]`, `[solver]`, `[output]`
//! and `[compare]` sections, overridden key by key from the command line.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};
use tvnewton::baselines::ZUpdate;
use tvnewton::problems::ProblemConfig;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    #[default]
    Alm,
    ChambollePock,
    Admm,
    SmoothedBb,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Alm => "alm",
            SolverKind::ChambollePock => "chambolle-pock",
            SolverKind::Admm => "admm",
            SolverKind::SmoothedBb => "smoothed-bb",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZUpdateName {
    AsPrinted,
    GaussSeidel,
}

impl From<ZUpdateName> for ZUpdate {
    fn from(z: ZUpdateName) -> Self {
        match z {
            ZUpdateName::AsPrinted => ZUpdate::AsPrinted,
            ZUpdateName::GaussSeidel => ZUpdate::GaussSeidel,
        }
    }
}

impl From<ZUpdate> for ZUpdateName {
    fn from(z: ZUpdate) -> Self {
        match z {
            ZUpdate::AsPrinted => ZUpdateName::AsPrinted,
            ZUpdate::GaussSeidel => ZUpdateName::GaussSeidel,
        }
    }
}

/// Solver settings. Unset keys take the solver's default; keys that do not
/// apply to the selected solver are ignored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub name: SolverKind,
    pub eps_opt: Option<f64>,
    /// Outer iteration cap (ALM) or iteration cap (baselines).
    pub max_outer: Option<usize>,
    /// Reference reconstruction (CSV image) for the error columns.
    pub reference: Option<PathBuf>,

    pub beta: Option<f64>,
    /// `c` in the penalty growth `γ_l = c/(c + l)`.
    pub gamma: Option<f64>,
    pub sigma0: Option<f64>,
    pub nu: Option<f64>,
    pub rho0: Option<f64>,
    pub inner_eps: Option<f64>,
    pub inner_max_iter: Option<usize>,

    pub max_cg: Option<usize>,
    pub cg_tol: Option<f64>,

    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub theta: Option<f64>,
    pub z_update: Option<ZUpdateName>,

    pub epsilon_smooth: Option<f64>,
    pub tau0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub solvers: Vec<SolverKind>,
    /// Tolerance of the ALM run that produces the reference solution.
    pub reference_eps_opt: f64,
    pub eps_opt_alm: f64,
    pub eps_opt_chambolle_pock: f64,
    pub eps_opt_admm: f64,
    pub eps_opt_smoothed_bb: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            solvers: vec![SolverKind::Alm, SolverKind::ChambollePock, SolverKind::Admm],
            reference_eps_opt: 1e-9,
            eps_opt_alm: 1e-9,
            eps_opt_chambolle_pock: 1e-6,
            eps_opt_admm: 1e-6,
            eps_opt_smoothed_bb: 1e-6,
        }
    }
}

impl CompareConfig {
    pub fn tolerance(&self, kind: SolverKind) -> f64 {
        match kind {
            SolverKind::Alm => self.eps_opt_alm,
            SolverKind::ChambollePock => self.eps_opt_chambolle_pock,
            SolverKind::Admm => self.eps_opt_admm,
            SolverKind::SmoothedBb => self.eps_opt_smoothed_bb,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    pub compare: CompareConfig,
}

/// Parses the right-hand side of `key=value` as a TOML value, falling back
/// to a bare string so that `--set problem.operator=blur` works unquoted.
pub fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Sets `section.key` in `table`.
pub fn set_key(table: &mut Table, dotted: &str, value: Value) -> Result<(), CliError> {
    let (section, key) = dotted
        .split_once('.')
        .filter(|(s, k)| !s.is_empty() && !k.is_empty() && !k.contains('.'))
        .ok_or_else(|| CliError::config(dotted, "overrides take the form section.key=value"))?;
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    match entry {
        Value::Table(t) => {
            t.insert(key.to_string(), value);
            Ok(())
        }
        _ => Err(CliError::config(section, "must be a section")),
    }
}

/// Reads `path` (if any), applies `overrides` in order, and fills defaults.
pub fn load(path: Option<&Path>, overrides: &[(String, Value)]) -> Result<RunConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::config("--config", format!("cannot read {}: {e}", p.display())))?;
            text.parse::<Table>()
                .map_err(|e| CliError::config("--config", format!("{}: {e}", p.display())))?
        }
        None => Table::new(),
    };
    for (key, value) in overrides {
        set_key(&mut table, key, value.clone())?;
    }
    serde_path_to_error::deserialize(Value::Table(table)).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." { "config".to_string() } else { path };
        CliError::config(key, e.into_inner().to_string())
    })
}

pub fn write_resolved(cfg: &RunConfig, path: &Path) -> Result<(), CliError> {
    let text = toml::to_string(cfg).map_err(|e| CliError::Other(format!("serializing configuration: {e}")))?;
    std::fs::write(path, text).map_err(|e| CliError::Other(format!("writing {}: {e}", path.display())))
}
