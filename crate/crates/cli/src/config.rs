use std::fs;
use std::path::{Path, PathBuf};

use relbelief::elicitation::{ElicitationSpec, MIN_COVERAGE_SAMPLES};
use relbelief::regression::inference::MIN_INFERENCE_SAMPLES;
use relbelief::regression::table::MIN_TABLE_SAMPLES;
use relbelief::regression::BinaryRegressionData;
use relbelief::seeding::MonteCarlo;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent input. Nothing has been written.
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Core(#[from] relbelief::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Usage(_) => 2,
            CliError::Core(relbelief::Error::Infeasible(_)) => 3,
            _ => 1,
        }
    }

    fn parse(path: &Path, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hypothesis {
    /// Zero-based coefficient index.
    pub coordinate: usize,
    pub value: f64,
}

fn default_support_mass() -> f64 {
    0.995
}

fn default_conflict_level() -> f64 {
    0.05
}

/// On-disk run configuration. Input paths are relative to the file itself.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub elicitation: PathBuf,
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub n_samples: Option<usize>,
    #[serde(default)]
    pub chunks: Option<usize>,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Replaces the level stored in the elicitation file.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub hypothesis: Option<Hypothesis>,
    #[serde(default)]
    pub far_alternatives: Vec<f64>,
    #[serde(default = "default_support_mass")]
    pub support_mass: f64,
    /// Grid spacing used once a grid has to be widened.
    #[serde(default)]
    pub extend_delta: Option<f64>,
    #[serde(default)]
    pub extend_grid: bool,
    #[serde(default = "default_conflict_level")]
    pub conflict_level: f64,
}

/// Command-line values that take precedence over the run file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n_samples: Option<usize>,
    pub chunks: Option<usize>,
    pub delta: Option<f64>,
    pub gamma: Option<f64>,
    pub extend_grid: bool,
}

/// Which inputs a command needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Needs {
    pub data: bool,
    pub tables: bool,
    pub inference: bool,
    pub hypothesis: bool,
}

/// A fully validated run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: ElicitationSpec,
    pub data: Option<BinaryRegressionData>,
    pub mc: MonteCarlo,
    pub delta: f64,
    pub hypothesis: Option<Hypothesis>,
    pub far_alternatives: Vec<f64>,
    pub support_mass: f64,
    pub extend_delta: Option<f64>,
    pub extend_grid: bool,
    pub conflict_level: f64,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::parse(path, e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(path, e.to_string()))
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides, needs: Needs) -> Result<Self, CliError> {
        let file: RunFile = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));

        let spec_path = base.join(&file.elicitation);
        let mut spec: ElicitationSpec = read_json(&spec_path)?;
        if let Some(g) = overrides.gamma.or(file.gamma) {
            spec.gamma = g;
        }
        spec.validate()
            .map_err(|e| CliError::parse(&spec_path, e.to_string()))?;

        let data = match (&file.data, needs.data) {
            (Some(rel), _) => {
                let data_path = base.join(rel);
                let data: BinaryRegressionData = read_json(&data_path)?;
                data.validate()
                    .map_err(|e| CliError::parse(&data_path, e.to_string()))?;
                if data.experiment.columns != spec.k() {
                    return Err(CliError::parse(
                        &data_path,
                        format!(
                            "columns: design has {} columns but the elicitation has {}",
                            data.experiment.columns,
                            spec.k()
                        ),
                    ));
                }
                Some(data)
            }
            (None, true) => return Err(CliError::parse(path, "data: required by this command")),
            (None, false) => None,
        };

        let seed = overrides
            .seed
            .or(file.seed)
            .ok_or_else(|| CliError::parse(path, "seed: required for Monte Carlo work"))?;
        let n_samples = overrides
            .n_samples
            .or(file.n_samples)
            .ok_or_else(|| CliError::parse(path, "n_samples: required for Monte Carlo work"))?;
        let mut mc = MonteCarlo::new(n_samples, seed);
        if let Some(c) = overrides.chunks.or(file.chunks) {
            mc = mc.with_chunks(c);
        }
        let min = if needs.tables {
            MIN_TABLE_SAMPLES
        } else if needs.inference {
            MIN_INFERENCE_SAMPLES
        } else {
            MIN_COVERAGE_SAMPLES
        };
        mc.validate(min)
            .map_err(|e| CliError::parse(path, format!("n_samples/chunks: {e}")))?;

        let delta = overrides.delta.or(file.delta).unwrap_or(0.01);
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(CliError::parse(
                path,
                format!("delta: must be positive, got {delta}"),
            ));
        }
        if let Some(d) = file.extend_delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(CliError::parse(
                    path,
                    format!("extend_delta: must be positive, got {d}"),
                ));
            }
        }
        if !(file.support_mass > 0.0 && file.support_mass < 1.0) {
            return Err(CliError::parse(path, "support_mass: must lie in (0, 1)"));
        }
        if !(file.conflict_level > 0.0 && file.conflict_level < 1.0) {
            return Err(CliError::parse(path, "conflict_level: must lie in (0, 1)"));
        }
        match file.hypothesis {
            Some(h) if h.coordinate >= spec.k() || !h.value.is_finite() => {
                return Err(CliError::parse(
                    path,
                    format!(
                        "hypothesis: coordinate must be below {} and value finite",
                        spec.k()
                    ),
                ));
            }
            None if needs.hypothesis => {
                return Err(CliError::parse(
                    path,
                    "hypothesis: required by this command",
                ));
            }
            _ => {}
        }
        if file.far_alternatives.iter().any(|v| !v.is_finite()) {
            return Err(CliError::parse(
                path,
                "far_alternatives: values must be finite",
            ));
        }

        Ok(Self {
            spec,
            data,
            mc,
            delta,
            hypothesis: file.hypothesis,
            far_alternatives: file.far_alternatives,
            support_mass: file.support_mass,
            extend_delta: file.extend_delta,
            extend_grid: overrides.extend_grid || file.extend_grid,
            conflict_level: file.conflict_level,
        })
    }
}
