//! Run configuration: a TOML file with one table per concern, overridden by
//! command-line flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dataset::{self, Dataset, LabelColumn, SyntheticSpec};
use crate::error::{Error, Result};
use crate::path::{PathSpec, DEFAULT_FOLDS, DEFAULT_FRACTIONS};
use crate::penalty::{Penalty, PenaltyKind, DEFAULT_CAP_RATIO, DEFAULT_MCP_THETA, DEFAULT_SCAD_THETA};
use crate::solver::{self, InitialStep, SolverOptions, StartPoint, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Libsvm,
}

impl std::str::FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DataFormat::Csv),
            "libsvm" => Ok(DataFormat::Libsvm),
            other => Err(Error::Config(format!("unknown data format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmitFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: Option<PathBuf>,
    pub format: Option<DataFormat>,
    /// Label column for CSV input; negative values count from the end.
    pub label_column: Option<i64>,
    pub has_header: Option<bool>,
    /// Minimum feature count for LIBSVM input.
    pub n_features: Option<usize>,
    pub append_bias: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_nonzero: usize,
    #[serde(default)]
    pub noise_scale: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PenaltySection {
    pub kind: Option<String>,
    /// λ as a fraction of λ_max.
    pub lambda_frac: Option<f64>,
    /// Absolute λ; takes precedence over `lambda_frac`.
    pub lambda: Option<f64>,
    pub theta: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub variant: Option<String>,
    pub eta: Option<f64>,
    /// Fixed initial L; the Lipschitz estimate is used when absent.
    pub l0: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub max_backtracks: Option<usize>,
    pub max_expansions: Option<usize>,
    pub seed: Option<u64>,
    /// `"zeros"` or `"random"`.
    pub beta0: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PathSection {
    pub fractions: Option<Vec<f64>>,
    pub warm_start: Option<bool>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CvSection {
    pub folds: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    /// `[n_samples, n_features]` pairs.
    pub grid: Option<Vec<[usize; 2]>>,
    pub lambda_frac: Option<f64>,
    pub repetitions: Option<usize>,
    pub variants: Option<Vec<String>>,
    pub n_nonzero: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub emit: Option<Vec<EmitFormat>>,
    /// Keep every n-th trace record (the last one is always kept).
    pub trace_every: Option<usize>,
}

/// Parsed configuration file. Every table and key is optional.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub data: DataSection,
    pub synthetic: Option<SyntheticSection>,
    #[serde(default)]
    pub penalty: PenaltySection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub path: PathSection,
    #[serde(default)]
    pub cv: CvSection,
    #[serde(default)]
    pub bench: BenchSection,
    #[serde(default)]
    pub output: OutputSection,
}

pub const DEFAULT_LAMBDA_FRAC: f64 = 0.1;
pub const DEFAULT_BENCH_GRID: [[usize; 2]; 2] = [[1000, 500], [1000, 1000]];

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        // relative data paths are resolved against the config file
        if let (Some(data), Some(dir)) = (cfg.data.path.as_mut(), path.parent()) {
            if data.is_relative() && !data.exists() {
                let candidate = dir.join(&*data);
                if candidate.exists() {
                    *data = candidate;
                }
            }
        }
        Ok(cfg)
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        let ds = match (&self.data.path, &self.synthetic) {
            (Some(path), _) => {
                if !path.exists() {
                    return Err(Error::io(
                        path,
                        std::io::Error::new(std::io::ErrorKind::NotFound, "dataset file not found"),
                    ));
                }
                let format = match self.data.format {
                    Some(f) => f,
                    None => guess_format(path),
                };
                match format {
                    DataFormat::Csv => {
                        let col = match self.data.label_column.unwrap_or(-1) {
                            -1 => LabelColumn::Last,
                            c if c >= 0 => LabelColumn::Index(c as usize),
                            c => {
                                return Err(Error::Config(format!(
                                    "label_column {c} unsupported (use >= 0 or -1 for last)"
                                )))
                            }
                        };
                        dataset::load_csv(path, col, self.data.has_header.unwrap_or(false))?
                    }
                    DataFormat::Libsvm => dataset::load_libsvm(path, self.data.n_features)?,
                }
            }
            (None, Some(s)) => {
                let spec = SyntheticSpec {
                    n_samples: s.n_samples,
                    n_features: s.n_features,
                    n_nonzero: s.n_nonzero,
                    noise_scale: s.noise_scale,
                    seed: s.seed,
                };
                dataset::generate_synthetic(&spec)?.0
            }
            (None, None) => {
                return Err(Error::Config(
                    "no dataset: set [data].path / --data or a [synthetic] table".into(),
                ))
            }
        };
        Ok(if self.data.append_bias.unwrap_or(false) {
            ds.with_bias()
        } else {
            ds
        })
    }

    pub fn penalty_kind(&self) -> Result<PenaltyKind> {
        self.penalty.kind.as_deref().unwrap_or("l1").parse()
    }

    /// Penalty with a placeholder λ of 1; callers substitute the real value.
    pub fn penalty_template(&self) -> Result<Penalty> {
        let kind = self.penalty_kind()?;
        let theta = self.penalty.theta.unwrap_or(match kind {
            PenaltyKind::Mcp => DEFAULT_MCP_THETA,
            _ => DEFAULT_SCAD_THETA,
        });
        Ok(Penalty {
            kind,
            lambda: 1.0,
            theta,
            epsilon: self.penalty.epsilon.unwrap_or(f64::NAN),
        })
    }

    /// Concrete penalty for a given λ_max.
    pub fn penalty_for(&self, lambda_max: f64) -> Result<Penalty> {
        let lambda = match self.penalty.lambda {
            Some(l) => l,
            None => self.lambda_frac() * lambda_max,
        };
        let pen = resolve_penalty(self.penalty_template()?, lambda);
        pen.validate()?;
        Ok(pen)
    }

    pub fn lambda_frac(&self) -> f64 {
        self.penalty.lambda_frac.unwrap_or(DEFAULT_LAMBDA_FRAC)
    }

    pub fn solver_options(&self) -> Result<SolverOptions> {
        let s = &self.solver;
        let variant: Variant = s.variant.as_deref().unwrap_or("ista_bb").parse()?;
        let start = match s.beta0.as_deref().unwrap_or("zeros") {
            "zeros" => StartPoint::Zeros,
            "random" => StartPoint::Random,
            other => return Err(Error::Config(format!("unknown beta0 {other:?}"))),
        };
        let opts = SolverOptions {
            variant,
            eta: s.eta.unwrap_or(solver::DEFAULT_ETA),
            initial_step: s.l0.map_or(InitialStep::FromLipschitz, InitialStep::Fixed),
            max_iters: s.max_iters.unwrap_or(solver::DEFAULT_MAX_ITERS),
            tol: s.tol.unwrap_or(solver::DEFAULT_TOL),
            max_backtracks: s.max_backtracks.unwrap_or(solver::DEFAULT_MAX_BACKTRACKS),
            max_expansions: s.max_expansions.unwrap_or(solver::DEFAULT_MAX_EXPANSIONS),
            seed: s.seed.unwrap_or(0),
            start,
        };
        opts.validate()?;
        Ok(opts)
    }

    pub fn fractions(&self) -> Vec<f64> {
        self.path
            .fractions
            .clone()
            .unwrap_or_else(|| DEFAULT_FRACTIONS.to_vec())
    }

    /// Path specification; the penalty's λ is replaced per point.
    pub fn path_spec(&self) -> Result<PathSpec> {
        let template = resolve_penalty(self.penalty_template()?, 1.0);
        let spec = PathSpec {
            fractions: self.fractions(),
            warm_start: self.path.warm_start.unwrap_or(true),
            penalty: template,
            cap_ratio: self.penalty.epsilon.is_none().then_some(DEFAULT_CAP_RATIO),
            options: self.solver_options()?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn folds(&self) -> usize {
        self.cv.folds.unwrap_or(DEFAULT_FOLDS)
    }

    pub fn cv_seed(&self) -> u64 {
        self.cv.seed.or(self.solver.seed).unwrap_or(0)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn emits(&self, format: EmitFormat) -> bool {
        match &self.output.emit {
            Some(list) => list.contains(&format),
            None => format == EmitFormat::Csv,
        }
    }

    pub fn trace_every(&self) -> usize {
        self.output.trace_every.unwrap_or(1).max(1)
    }
}

/// Fills in the capped-ℓ1 cap from λ when it was not configured.
fn resolve_penalty(template: Penalty, lambda: f64) -> Penalty {
    let epsilon = if template.epsilon.is_nan() {
        DEFAULT_CAP_RATIO * lambda
    } else {
        template.epsilon
    };
    Penalty {
        lambda,
        epsilon,
        ..template
    }
}

fn guess_format(path: &Path) -> DataFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("txt") | Some("data") => DataFormat::Csv,
        _ => DataFormat::Libsvm,
    }
}
