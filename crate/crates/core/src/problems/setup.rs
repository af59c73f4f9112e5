use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::noise::add_noise;
use super::phantom::{default_shapes, phantom_piecewise, Shape};
use super::Problem;
use crate::alm::auto_alpha;
use crate::linops::{
    binomial_kernel, blur_operator, lambda_max_normal, radon_operator, verify_adjoint, DenseMatrix,
    LinearMap, RadonGeometry, TvDifferenceOp,
};
use crate::{Error, ImageGrid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Radon,
    Blur,
    Dense,
}

/// `alpha = <number> | "auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NumberOrWord", into = "NumberOrWord")]
pub enum AlphaChoice {
    Value(f64),
    Auto,
}

/// `delta = <number> | "noise"`; `"noise"` takes the realized noise norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NumberOrWord", into = "NumberOrWord")]
pub enum DeltaChoice {
    Value(f64),
    Noise,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum NumberOrWord {
    Number(f64),
    Word(String),
}

impl TryFrom<NumberOrWord> for AlphaChoice {
    type Error = String;
    fn try_from(v: NumberOrWord) -> std::result::Result<Self, String> {
        match v {
            NumberOrWord::Number(x) => Ok(AlphaChoice::Value(x)),
            NumberOrWord::Word(w) if w == "auto" => Ok(AlphaChoice::Auto),
            NumberOrWord::Word(w) => Err(format!("expected a number or \"auto\", got \"{w}\"")),
        }
    }
}

impl From<AlphaChoice> for NumberOrWord {
    fn from(a: AlphaChoice) -> Self {
        match a {
            AlphaChoice::Value(x) => NumberOrWord::Number(x),
            AlphaChoice::Auto => NumberOrWord::Word("auto".into()),
        }
    }
}

impl TryFrom<NumberOrWord> for DeltaChoice {
    type Error = String;
    fn try_from(v: NumberOrWord) -> std::result::Result<Self, String> {
        match v {
            NumberOrWord::Number(x) => Ok(DeltaChoice::Value(x)),
            NumberOrWord::Word(w) if w == "noise" => Ok(DeltaChoice::Noise),
            NumberOrWord::Word(w) => Err(format!("expected a number or \"noise\", got \"{w}\"")),
        }
    }
}

impl From<DeltaChoice> for NumberOrWord {
    fn from(d: DeltaChoice) -> Self {
        match d {
            DeltaChoice::Value(x) => NumberOrWord::Number(x),
            DeltaChoice::Noise => NumberOrWord::Word("noise".into()),
        }
    }
}

/// The `[problem]` section of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub operator: OperatorKind,
    pub n_row: usize,
    pub n_col: usize,
    pub n_angles: usize,
    /// Defaults to `⌈√(n_row² + n_col²)⌉`.
    pub n_rays: Option<usize>,
    pub angle_fraction: f64,
    pub blur_radius: usize,
    /// Defaults to the binomial kernel of `blur_radius`.
    pub blur_weights: Option<Vec<f64>>,
    /// Dense forward matrix (CSV) for `operator = "dense"`.
    pub matrix: Option<PathBuf>,
    /// Measured data (one value per line) replacing the synthetic `A·x_true`.
    pub data_file: Option<PathBuf>,
    /// Ground truth image (CSV) replacing the phantom.
    pub truth_file: Option<PathBuf>,
    /// Phantom shapes, e.g. `"disk 0.5 0.5 0.2 1.0"`.
    pub shapes: Option<Vec<String>>,
    pub background: f64,
    /// Relative noise level.
    pub noise: f64,
    pub alpha: Option<AlphaChoice>,
    pub delta: Option<DeltaChoice>,
    pub alpha_samples: usize,
    pub seed: u64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            operator: OperatorKind::Radon,
            n_row: 32,
            n_col: 32,
            n_angles: 30,
            n_rays: None,
            angle_fraction: 1.0,
            blur_radius: 2,
            blur_weights: None,
            matrix: None,
            data_file: None,
            truth_file: None,
            shapes: None,
            background: 0.0,
            noise: 0.05,
            alpha: None,
            delta: None,
            alpha_samples: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedProblem {
    pub problem: Problem,
    /// The phantom or loaded truth, when the data were synthesized from one.
    pub truth: Option<ImageGrid>,
    pub n_row: usize,
    pub n_col: usize,
    /// Realized absolute noise norm (0 for loaded data).
    pub delta_abs: f64,
    /// The configuration with every default and derived value filled in.
    pub resolved: ProblemConfig,
}

fn load_vector(path: &std::path::Path) -> Result<Vec<f64>> {
    let rows = crate::image::read_csv_matrix(path)?;
    Ok(rows.into_iter().flatten().collect())
}

/// Builds the forward operator, ground truth, noisy data and `α` described
/// by `cfg`. Both operators must pass the adjoint check before this returns.
pub fn make_problem(cfg: &ProblemConfig) -> Result<GeneratedProblem> {
    let mut resolved = cfg.clone();
    let (n_row, n_col) = (cfg.n_row, cfg.n_col);
    if n_row == 0 {
        return Err(Error::config("problem.n_row", "must be positive"));
    }
    if n_col == 0 {
        return Err(Error::config("problem.n_col", "must be positive"));
    }
    if !(cfg.noise >= 0.0 && cfg.noise.is_finite()) {
        return Err(Error::config("problem.noise", "must be a nonnegative number"));
    }
    let n = n_row * n_col;

    let a: Arc<dyn LinearMap> = match cfg.operator {
        OperatorKind::Radon => {
            let diag = ((n_row * n_row + n_col * n_col) as f64).sqrt().ceil() as usize;
            let n_rays = cfg.n_rays.unwrap_or(diag);
            resolved.n_rays = Some(n_rays);
            let g = RadonGeometry::new(n_row, n_col, cfg.n_angles, n_rays)
                .with_angle_fraction(cfg.angle_fraction);
            Arc::new(radon_operator(g)?)
        }
        OperatorKind::Blur => {
            let weights = cfg
                .blur_weights
                .clone()
                .unwrap_or_else(|| binomial_kernel(cfg.blur_radius));
            resolved.blur_weights = Some(weights.clone());
            Arc::new(blur_operator(n_row, n_col, cfg.blur_radius, &weights)?)
        }
        OperatorKind::Dense => {
            let path = cfg
                .matrix
                .as_ref()
                .ok_or_else(|| Error::config("problem.matrix", "required for the dense operator"))?;
            let m = DenseMatrix::from_csv(path).map_err(|e| Error::config("problem.matrix", e.to_string()))?;
            if m.cols() != n {
                return Err(Error::config(
                    "problem.matrix",
                    format!(
                        "{} has {} columns but the image has n_row·n_col = {n} pixels",
                        path.display(),
                        m.cols()
                    ),
                ));
            }
            Arc::new(m)
        }
    };
    let b_op: Arc<dyn LinearMap> = Arc::new(TvDifferenceOp::new(n_row, n_col));
    verify_adjoint(&*a, "problem.operator")?;
    verify_adjoint(&*b_op, "problem.regularizer")?;

    let truth = match &cfg.truth_file {
        Some(path) => {
            let img = ImageGrid::read_csv(path)
                .map_err(|e| Error::config("problem.truth_file", e.to_string()))?;
            if (img.n_row(), img.n_col()) != (n_row, n_col) {
                return Err(Error::config(
                    "problem.truth_file",
                    format!("image is {}×{}, expected {n_row}×{n_col}", img.n_row(), img.n_col()),
                ));
            }
            Some(img)
        }
        None if cfg.data_file.is_some() => None,
        None => {
            let shapes = match &cfg.shapes {
                Some(list) => list
                    .iter()
                    .map(|s| s.parse::<Shape>().map_err(|e| Error::config("problem.shapes", e)))
                    .collect::<Result<Vec<_>>>()?,
                None => default_shapes(),
            };
            resolved.shapes = Some(shapes.iter().map(Shape::to_string).collect());
            Some(phantom_piecewise(n_row, n_col, &shapes, cfg.background))
        }
    };

    let (data, delta_abs) = match &cfg.data_file {
        Some(path) => {
            let b = load_vector(path).map_err(|e| Error::config("problem.data_file", e.to_string()))?;
            if b.len() != a.range_dim() {
                return Err(Error::config(
                    "problem.data_file",
                    format!("has {} values, the operator produces {}", b.len(), a.range_dim()),
                ));
            }
            (b, 0.0)
        }
        None => {
            let clean = a.apply(truth.as_ref().expect("truth present without data file").values());
            let noisy = add_noise(&clean, cfg.noise, cfg.seed);
            (noisy.data, noisy.delta_abs)
        }
    };

    let alpha = match (cfg.alpha, cfg.delta) {
        (Some(AlphaChoice::Value(v)), _) => v,
        (None, None) => {
            return Err(Error::config(
                "problem.alpha",
                "no value given; set `alpha`, or `delta` for the automatic choice",
            ))
        }
        (Some(AlphaChoice::Auto), None) => {
            return Err(Error::config("problem.delta", "required when alpha = \"auto\""))
        }
        (_, Some(d)) => {
            let delta = match d {
                DeltaChoice::Value(v) => v,
                DeltaChoice::Noise => delta_abs,
            };
            if cfg.alpha_samples == 0 {
                return Err(Error::config("problem.alpha_samples", "must be at least 1"));
            }
            auto_alpha(&*a, &*b_op, delta, cfg.alpha_samples, cfg.seed).map_err(|e| match e {
                Error::Config { key, reason } if !key.contains('.') => Error::config(format!("problem.{key}"), reason),
                e => e,
            })?
        }
    };
    resolved.alpha = Some(AlphaChoice::Value(alpha));

    let lambda_a = lambda_max_normal(&*a);
    let lambda_b = lambda_max_normal(&*b_op);
    let problem = Problem::with_spectrum(a, b_op, data, alpha, lambda_a, lambda_b)?;
    Ok(GeneratedProblem {
        problem,
        truth,
        n_row,
        n_col,
        delta_abs,
        resolved,
    })
}
