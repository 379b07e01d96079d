//! The JSON run configuration.
//!
//! ```json
//! {
//!   "weights": {"alpha": 1.0, "beta": 0.75, "gamma": 0.5, "delta": 0.25,
//!               "size_scaling": "count_only", "size_ref": 512},
//!   "window": {"length_seconds": 604800, "epoch_start": null},
//!   "circles": {"bounds": [5, 15, 45, 135]},
//!   "solver": {"tolerance": 1e-9},
//!   "state_dir": "ego-ranker-state"
//! }
//! ```
//!
//! Every key is optional; unknown keys are rejected.

use std::path::{Path, PathBuf};

use ego_ranker_core::circles::CircleLayout;
use ego_ranker_core::colley::DEFAULT_TOLERANCE;
use ego_ranker_core::pipeline::PipelineConfig;
use ego_ranker_core::scoring::{InteractionWeights, DEFAULT_WINDOW_LENGTH};
use serde::Deserialize;

use crate::CliError;

pub const STATE_ENV: &str = "EGO_RANKER_STATE";
pub const DEFAULT_STATE_DIR: &str = "ego-ranker-state";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct WindowSection {
    length_seconds: u64,
    epoch_start: Option<u64>,
}

impl Default for WindowSection {
    fn default() -> Self {
        WindowSection {
            length_seconds: DEFAULT_WINDOW_LENGTH,
            epoch_start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CirclesSection {
    bounds: Option<CircleLayout>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SolverSection {
    tolerance: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    weights: InteractionWeights,
    window: WindowSection,
    circles: CirclesSection,
    solver: SolverSection,
    state_dir: Option<PathBuf>,
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub weights: InteractionWeights,
    pub window_length: u64,
    /// `None` anchors windows at the midnight before the first event.
    pub epoch_start: Option<u64>,
    pub layout: CircleLayout,
    pub tolerance: f64,
    pub state_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_file(ConfigFile::default(), None).expect("defaults are valid")
    }
}

impl RunConfig {
    fn from_file(file: ConfigFile, state_override: Option<PathBuf>) -> Result<Self, CliError> {
        file.weights
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if file.window.length_seconds == 0 {
            return Err(CliError::Config("window.length_seconds must be positive".into()));
        }
        if file.solver.tolerance.is_nan() || file.solver.tolerance <= 0.0 {
            return Err(CliError::Config("solver.tolerance must be positive".into()));
        }
        Ok(RunConfig {
            weights: file.weights,
            window_length: file.window.length_seconds,
            epoch_start: file.window.epoch_start,
            layout: file.circles.bounds.unwrap_or_default(),
            tolerance: file.solver.tolerance,
            state_dir: state_override
                .or(file.state_dir)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_STATE_DIR)),
        })
    }

    pub fn parse(text: &str, state_override: Option<PathBuf>) -> Result<Self, CliError> {
        let file: ConfigFile =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        RunConfig::from_file(file, state_override)
    }

    /// Reads the config file (defaults when `path` is `None`). A non-empty
    /// `state_override` replaces `state_dir`.
    pub fn load(path: Option<&Path>, state_override: Option<PathBuf>) -> Result<Self, CliError> {
        let state_override = state_override.filter(|p| !p.as_os_str().is_empty());
        match path {
            None => RunConfig::from_file(ConfigFile::default(), state_override),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", path.display()))
                })?;
                RunConfig::parse(&text, state_override)
            }
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            weights: self.weights,
            layout: self.layout.clone(),
            tolerance: self.tolerance,
        }
    }
}
