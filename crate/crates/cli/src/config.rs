//! Run configuration: one TOML document, echoed back with every default filled in.

use std::path::{Path, PathBuf};

use nclf_core::data::{downsample, load_generic, load_movielens, subsample, GenericSchema};
use nclf_core::evaluation::{CvProtocol, DEFAULT_LAMBDA_GRID};
use nclf_core::{Dataset, ModelKind, ModelShape, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DATA_ROOT_VAR: &str = "NCLF_DATA_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Generic,
    Movielens,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Downsample {
    /// Class whose events are thinned.
    pub label: bool,
    pub rate: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    /// Relative paths are looked up under `NCLF_DATA_ROOT` when it is set.
    pub path: PathBuf,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub schema: GenericSchema,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub downsample: Option<Downsample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Defaults per kind: cp `[13]`, primitive-nclf `[5, 1]`, nclf six ones.
    #[serde(default)]
    pub ranks: Option<Vec<usize>>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            kind: ModelKind::Nclf,
            ranks: None,
        }
    }
}

impl ModelSpec {
    pub fn shape(&self) -> Result<ModelShape, CliError> {
        match &self.ranks {
            None => Ok(ModelShape::default_for(self.kind)),
            Some(r) => {
                let shape = ModelShape::from_ranks(self.kind, r)
                    .map_err(|e| CliError::Config(format!("model.ranks: {e}")))?;
                if r.contains(&0) && self.kind != ModelKind::Bias {
                    return Err(CliError::Config("model.ranks: ranks must be positive".into()));
                }
                Ok(shape)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSpec {
    pub lambda_grid: Vec<f64>,
    pub selection_folds: usize,
    pub selection_folds_used: Option<usize>,
    pub measurement_folds: usize,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for CvSpec {
    fn default() -> Self {
        let p = CvProtocol::default();
        Self {
            lambda_grid: DEFAULT_LAMBDA_GRID.to_vec(),
            selection_folds: p.selection_folds,
            selection_folds_used: p.selection_folds_used,
            measurement_folds: p.measurement_folds,
            seed: p.seed,
            jobs: p.jobs,
        }
    }
}

impl CvSpec {
    pub fn protocol(&self) -> CvProtocol {
        CvProtocol {
            selection_folds: self.selection_folds,
            selection_folds_used: self.selection_folds_used,
            measurement_folds: self.measurement_folds,
            seed: self.seed,
            jobs: self.jobs,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub model: Option<PathBuf>,
    /// JSON lines, one record per epoch.
    pub log: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetSpec>,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub cv: CvSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fills every default so the echo is self-contained.
    pub fn effective(mut self) -> Result<Self, CliError> {
        let shape = self.model.shape()?;
        self.model.ranks = Some(shape.ranks());
        Ok(self)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks ranges and paths; messages start with the offending field.
    pub fn validate(&self, needs_dataset: bool) -> Result<(), CliError> {
        self.model.shape()?;
        self.train
            .validate()
            .map_err(|e| CliError::Config(format!("train.{}", strip_usage(&e))))?;
        if needs_dataset {
            let ds = self
                .dataset
                .as_ref()
                .ok_or_else(|| CliError::Config("dataset: section is required".into()))?;
            let path = resolve(&ds.path);
            if !path.is_file() {
                return Err(CliError::Config(format!(
                    "dataset.path: {} does not exist",
                    path.display()
                )));
            }
            if let Some(d) = &ds.downsample {
                check_rate("dataset.downsample.rate", d.rate)?;
            }
            if let Some(r) = ds.subsample {
                check_rate("dataset.subsample", r)?;
            }
        }
        let cv = &self.cv;
        if cv.lambda_grid.is_empty() {
            return Err(CliError::Config("cv.lambda_grid: must not be empty".into()));
        }
        if cv.lambda_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(CliError::Config("cv.lambda_grid: values must be finite and >= 0".into()));
        }
        if cv.selection_folds < 2 {
            return Err(CliError::Config("cv.selection_folds: need at least 2".into()));
        }
        if cv.measurement_folds < 2 {
            return Err(CliError::Config("cv.measurement_folds: need at least 2".into()));
        }
        if cv.selection_folds_used == Some(0) {
            return Err(CliError::Config("cv.selection_folds_used: must be positive".into()));
        }
        Ok(())
    }

    pub fn load_dataset(&self) -> Result<Dataset, CliError> {
        let ds = self
            .dataset
            .as_ref()
            .ok_or_else(|| CliError::Config("dataset: section is required".into()))?;
        let path = resolve(&ds.path);
        let mut data = match ds.format {
            Format::Generic => load_generic(&path, &ds.schema)?,
            Format::Movielens => load_movielens(&path)?,
        };
        if let Some(d) = &ds.downsample {
            data = downsample(&data, d.label, d.rate, d.seed)?;
        }
        if let Some(r) = ds.subsample {
            data = subsample(&data, r, self.train.seed)?;
        }
        Ok(data)
    }
}

fn check_rate(field: &str, rate: f64) -> Result<(), CliError> {
    if rate > 0.0 && rate <= 1.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{field}: must lie in (0, 1], got {rate}")))
    }
}

fn strip_usage(e: &nclf_core::Error) -> String {
    match e {
        nclf_core::Error::Usage(m) => m.clone(),
        other => other.to_string(),
    }
}

pub fn resolve(path: &Path) -> PathBuf {
    match std::env::var_os(DATA_ROOT_VAR) {
        Some(root) if path.is_relative() => PathBuf::from(root).join(path),
        _ => path.to_owned(),
    }
}
