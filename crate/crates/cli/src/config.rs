//! TOML run and suite descriptions, and the objects they build.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use svrc_core::dataio::{self, Dataset, Normalization};
use svrc_core::objectives::{
    self, DoubleWell, Quadratic, DEFAULT_LAMBDA, DOUBLE_WELL_SPREAD, DOUBLE_WELL_TILT,
};
use svrc_core::optimizers::{
    full_cubic_run, subsampled_cubic_run, svrc_run, PenaltySchedule, RunOutput, StoppingRule,
    SubproblemSolver, SubsampledConfig, SvrcConfig,
};
use svrc_core::{FiniteSumObjective, Vector};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    NcLogistic,
    NonlinearLeastSquares,
    RobustRegression,
    DoubleWell,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Classification,
    Regression,
    A9aLike,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticData {
    pub n: usize,
    pub d: usize,
    pub seed: Option<u64>,
    pub generator: Option<Generator>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub family: Family,
    pub lambda: Option<f64>,
    pub dataset: Option<PathBuf>,
    /// Expected feature count of `dataset`.
    pub dim: Option<usize>,
    pub subsample: Option<usize>,
    #[serde(default)]
    pub normalization: Normalization,
    pub synthetic: Option<SyntheticData>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Start {
    #[default]
    Zeros,
    Constant {
        value: f64,
    },
    Gaussian {
        scale: f64,
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    pub max_epochs: Option<f64>,
    pub max_wall_seconds: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullCubicConfig {
    pub schedule: PenaltySchedule,
    pub iters: usize,
    #[serde(default)]
    pub solver: SubproblemSolver,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", tag = "algorithm")]
pub enum OptimizerConfig {
    Svrc(SvrcConfig),
    FullCubic(FullCubicConfig),
    SubsampledCubic(SubsampledConfig),
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOutputConfig {
    pub trace: PathBuf,
    #[serde(default = "yes")]
    pub timing: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub objective: ObjectiveConfig,
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub start: Start,
    pub output: RunOutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteOutputConfig {
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub timing: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SuiteEntry {
    pub label: String,
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub optimizer: OptimizerConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default)]
    pub seed: u64,
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub start: Start,
    pub output: SuiteOutputConfig,
    pub runs: Vec<SuiteEntry>,
}

/// The parts of a run or suite file that `check` reads.
#[derive(Debug, Clone, Deserialize)]
pub struct ObjectiveOnly {
    #[serde(default)]
    pub seed: u64,
    pub objective: ObjectiveConfig,
}

/// A parsed file together with the directory its relative paths resolve against.
pub struct Loaded<T> {
    pub config: T,
    pub base: PathBuf,
}

impl<T> Loaded<T> {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }
}

pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<Loaded<T>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let config =
        toml::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base })
}

impl Budget {
    pub fn stopping_rule(&self) -> CliResult<StoppingRule> {
        for (name, v) in [
            ("max_epochs", self.max_epochs),
            ("max_wall_seconds", self.max_wall_seconds),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(CliError::Data(format!(
                        "budget.{name} must be a finite number >= 0, got {v}"
                    )));
                }
            }
        }
        Ok(StoppingRule {
            max_epochs: self.max_epochs,
            max_wall_seconds: self.max_wall_seconds,
        })
    }
}

impl Start {
    pub fn point(&self, d: usize, default_seed: u64) -> CliResult<Vector> {
        Ok(match *self {
            Start::Zeros => Vector::zeros(d),
            Start::Constant { value } => Vector::from_element(d, value),
            Start::Gaussian { scale, seed } => {
                if !(scale >= 0.0) || !scale.is_finite() {
                    return Err(CliError::Data(format!(
                        "start.scale must be >= 0, got {scale}"
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(default_seed));
                Vector::from_fn(d, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
            }
        })
    }
}

fn load_dataset(objective: &ObjectiveConfig, path: &Path, seed: u64) -> CliResult<Dataset> {
    if !path.exists() {
        return Err(CliError::Data(format!(
            "dataset {} does not exist",
            path.display()
        )));
    }
    let mut ds = dataio::load_libsvm(path, objective.dim)?;
    if let Some(m) = objective.subsample {
        ds = dataio::subsample(&ds, seed, m)?;
    }
    Ok(ds)
}

fn synthetic_dataset(family: Family, s: &SyntheticData, seed: u64) -> CliResult<Dataset> {
    let generator = s.generator.unwrap_or(match family {
        Family::RobustRegression => Generator::Regression,
        _ => Generator::Classification,
    });
    Ok(match generator {
        Generator::Classification => dataio::synthetic_classification(seed, s.n, s.d)?,
        Generator::Regression => dataio::synthetic_regression(seed, s.n, s.d)?,
        Generator::A9aLike => {
            if s.d != 123 {
                return Err(CliError::Data(format!(
                    "a9a_like data has d = 123, got d = {}",
                    s.d
                )));
            }
            dataio::a9a_like(seed, s.n)?
        }
    })
}

impl ObjectiveConfig {
    /// Builds the objective; relative dataset paths resolve against `base`.
    pub fn build(&self, base: &Path, seed: u64) -> CliResult<Box<dyn FiniteSumObjective>> {
        if self.lambda.is_some() && self.family != Family::NcLogistic {
            return Err(CliError::Data(
                "objective.lambda applies to nc_logistic only".into(),
            ));
        }
        let seed = self.synthetic.as_ref().and_then(|s| s.seed).unwrap_or(seed);
        match self.family {
            Family::DoubleWell | Family::Quadratic => {
                if self.dataset.is_some() {
                    return Err(CliError::Data(
                        "double_well and quadratic objectives are synthetic only".into(),
                    ));
                }
                let s = self.synthetic_table()?;
                return Ok(if self.family == Family::DoubleWell {
                    Box::new(DoubleWell::new(
                        seed,
                        s.n,
                        s.d,
                        DOUBLE_WELL_SPREAD,
                        DOUBLE_WELL_TILT,
                    )?)
                } else {
                    Box::new(Quadratic::random_convex(seed, s.n, s.d)?)
                });
            }
            _ => {}
        }
        let ds = match (&self.dataset, &self.synthetic) {
            (Some(p), None) => load_dataset(self, &base.join(p), seed)?,
            (None, Some(s)) => synthetic_dataset(self.family, s, seed)?,
            _ => {
                return Err(CliError::Data(
                    "objective needs exactly one of dataset or synthetic".into(),
                ))
            }
        };
        let ds = dataio::normalize_features(&ds, self.normalization)?;
        let binary = |ds: Dataset| {
            if ds.is_binary() {
                Ok(ds)
            } else {
                ds.binarized()
            }
        };
        Ok(match self.family {
            Family::NcLogistic => Box::new(objectives::nc_logistic(
                binary(ds)?,
                self.lambda.unwrap_or(DEFAULT_LAMBDA),
            )?),
            Family::NonlinearLeastSquares => {
                Box::new(objectives::nonlinear_least_squares(binary(ds)?)?)
            }
            Family::RobustRegression => Box::new(objectives::robust_linear_regression(ds)?),
            Family::DoubleWell | Family::Quadratic => unreachable!(),
        })
    }

    fn synthetic_table(&self) -> CliResult<&SyntheticData> {
        self.synthetic.as_ref().ok_or_else(|| {
            CliError::Data("synthetic objective needs an [objective.synthetic] table".into())
        })
    }
}

impl OptimizerConfig {
    pub fn execute(
        &self,
        obj: &dyn FiniteSumObjective,
        x0: &Vector,
        seed: u64,
        stop: StoppingRule,
    ) -> svrc_core::Result<RunOutput> {
        match self {
            OptimizerConfig::Svrc(c) => {
                let config = SvrcConfig {
                    seed,
                    stop,
                    ..c.clone()
                };
                svrc_run(obj, x0, &config)
            }
            OptimizerConfig::FullCubic(c) => {
                full_cubic_run(obj, x0, &c.schedule, c.iters, &c.solver, stop)
            }
            OptimizerConfig::SubsampledCubic(c) => {
                let config = SubsampledConfig {
                    seed,
                    stop,
                    ..c.clone()
                };
                subsampled_cubic_run(obj, x0, &config)
            }
        }
    }
}
