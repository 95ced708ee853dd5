//! Run configuration shared by every command, loadable from JSON.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{InputKind, DEFAULT_AMPLITUDE, DEFAULT_OMEGA, DEFAULT_STEPS};
use crate::trident::Parametrization;
use crate::vfield::{Coords, FieldError, VectorField};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Dsl {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSource {
    Original,
    Transformed,
    /// File with one vector field per line; `#` starts a comment.
    Dsl(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Csv,
    Svg,
    Both,
}

impl Emit {
    pub fn csv(self) -> bool {
        matches!(self, Emit::Csv | Emit::Both)
    }

    pub fn svg(self) -> bool {
        matches!(self, Emit::Svg | Emit::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSource,
    /// Base point for analysis and start of every simulation.
    pub point: [f64; 6],
    pub input: InputKind,
    pub amplitude: f64,
    pub omega: f64,
    pub periods: usize,
    /// Steps per period.
    pub steps: usize,
    /// Amplitudes visited by `sweep`.
    pub amplitudes: Vec<f64>,
    pub out_dir: Option<PathBuf>,
    pub emit: Emit,
    /// Simulate the nilpotent approximation instead of the exact model.
    pub nilpotent: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelSource::Transformed,
            point: [0.0; 6],
            input: InputKind::Bracket12,
            amplitude: DEFAULT_AMPLITUDE,
            omega: DEFAULT_OMEGA,
            periods: 1,
            steps: DEFAULT_STEPS,
            amplitudes: vec![0.2, 0.1, 0.05],
            out_dir: None,
            emit: Emit::Both,
            nilpotent: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.into(),
            source,
        })?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|source| ConfigError::Json {
            path: path.into(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.steps < 1 {
            return bad("steps must be at least 1".into());
        }
        if self.periods < 1 {
            return bad("periods must be at least 1".into());
        }
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return bad(format!("amplitude must be non-negative, got {}", self.amplitude));
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return bad(format!("omega must be positive, got {}", self.omega));
        }
        if let Some(a) = self.amplitudes.iter().find(|a| !(**a >= 0.0) || !a.is_finite()) {
            return bad(format!("sweep amplitudes must be non-negative, got {a}"));
        }
        if self.point.iter().any(|v| !v.is_finite()) {
            return bad("point must be finite".into());
        }
        if self.input == InputKind::Custom {
            return bad("input must be one of 12, 13, 23".into());
        }
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn load_model(&self) -> Result<Model, ConfigError> {
        match &self.model {
            ModelSource::Original => Ok(Model::builtin(Parametrization::Original)),
            ModelSource::Transformed => Ok(Model::builtin(Parametrization::Transformed)),
            ModelSource::Dsl(path) => {
                let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
                    path: path.clone(),
                    source,
                })?;
                Model::from_dsl(&text).map_err(|(line, column, message)| ConfigError::Dsl {
                    path: path.clone(),
                    line,
                    column,
                    message,
                })
            }
        }
    }
}

/// Control fields plus the wheel kinematics used to interpret them.
#[derive(Debug, Clone)]
pub struct Model {
    pub name: String,
    pub fields: Vec<VectorField>,
    /// Wheel geometry used for poses and slip.
    pub kinematics: Parametrization,
    /// False for user-supplied fields, whose slip has no physical meaning.
    pub builtin: bool,
}

impl Model {
    pub fn builtin(param: Parametrization) -> Self {
        let name = match param {
            Parametrization::Original => "original",
            Parametrization::Transformed => "transformed",
        };
        Model {
            name: name.into(),
            fields: param.fields().to_vec(),
            kinematics: param,
            builtin: true,
        }
    }

    /// Parses one field per non-blank line. Errors carry a 1-based line and column.
    pub fn from_dsl(text: &str) -> Result<Self, (usize, usize, String)> {
        let mut fields = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("");
            if line.trim().is_empty() {
                continue;
            }
            match VectorField::parse(line) {
                Ok(f) => fields.push(f.with_coords(Coords::X)),
                Err(FieldError::Parse(e)) => return Err((i + 1, e.position(), e.to_string())),
                Err(e) => return Err((i + 1, 1, e.to_string())),
            }
        }
        if fields.is_empty() {
            return Err((1, 1, "no vector fields".into()));
        }
        let n = fields[0].dim();
        if let Some(k) = fields.iter().position(|f| f.dim() != n) {
            return Err((
                k + 1,
                1,
                format!("field has dimension {} but the first has {n}", fields[k].dim()),
            ));
        }
        Ok(Model {
            name: "dsl".into(),
            fields,
            kinematics: Parametrization::Transformed,
            builtin: false,
        })
    }
}
