//! TOML task configuration.
//!
//! A task file looks like:
//!
//! ```toml
//! schema_version = 1
//! id = "pointmass"
//! dynamics = "pointmass"
//! horizon = 60
//! dt = 0.1
//! x0 = [0.0, 0.0, 0.0, 0.0]
//! goal = [4.0, 0.0, 0.0, 0.0]
//!
//! [cost]
//! state_weights = [0.0, 0.0, 0.0, 0.0]
//! control_weights = [0.01, 0.01]
//! terminal_weights = [20.0, 20.0, 1.0, 1.0]
//!
//! [[obstacle]]
//! center = [2.0, 0.0]
//! radius = 0.4
//! weight = 5.0
//!
//! [solver]
//! alpha = 0.05
//! modes = 4
//! resample_every = 8
//! iterations = 120
//! seed = 0
//! ```
//!
//! Syntax and type errors are reported with line and column numbers.

use serde::Deserialize;

use crate::error::ConfigError;
use crate::systems;
use crate::task::{SolverOptions, TaskDefinition};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub id: String,
    /// One of `pointmass`, `car`, `quadcopter`, `manipulator`.
    pub dynamics: String,
    pub horizon: usize,
    pub dt: f64,
    pub x0: Vec<f64>,
    /// Goal state for the vehicle systems; end-effector target (length 3)
    /// for the manipulator.
    pub goal: Vec<f64>,
    pub cost: CostConfig,
    #[serde(default, rename = "obstacle")]
    pub obstacles: Vec<ObstacleConfig>,
    pub solver: SolverSection,
    /// Manipulator only: per-joint inertias (default all 1).
    pub joint_inertias: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    /// Diagonal running state weights (vehicle systems).
    pub state_weights: Option<Vec<f64>>,
    /// Diagonal control weights.
    pub control_weights: Vec<f64>,
    /// Diagonal terminal state weights (vehicle systems).
    pub terminal_weights: Option<Vec<f64>>,
    /// Control reference the effort cost is centered on (e.g. hover
    /// thrust); defaults to zero.
    pub control_reference: Option<Vec<f64>>,
    /// Manipulator: running end-effector attraction weight.
    pub ee_weight: Option<f64>,
    /// Manipulator: terminal end-effector weight.
    pub ee_terminal_weight: Option<f64>,
    /// Manipulator: running joint-velocity weight.
    pub velocity_weight: Option<f64>,
    /// Manipulator: terminal joint-velocity weight.
    pub velocity_terminal_weight: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleConfig {
    pub center: Vec<f64>,
    pub radius: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub alpha: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_resample_every")]
    pub resample_every: usize,
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_line_search_steps")]
    pub line_search_steps: usize,
    #[serde(default = "default_convergence_tol")]
    pub convergence_tol: f64,
    #[serde(default = "default_convergence_window")]
    pub convergence_window: usize,
}

fn default_schema_version() -> u32 {
    1
}

fn default_modes() -> usize {
    4
}

fn default_resample_every() -> usize {
    8
}

fn default_line_search_steps() -> usize {
    11
}

fn default_convergence_tol() -> f64 {
    1e-9
}

fn default_convergence_window() -> usize {
    5
}

impl SolverSection {
    pub fn to_options(&self) -> SolverOptions {
        SolverOptions {
            alpha: self.alpha,
            modes: self.modes,
            resample_every: self.resample_every,
            iterations: self.iterations,
            seed: self.seed,
            line_search_steps: self.line_search_steps,
            convergence_tol: self.convergence_tol,
            convergence_window: self.convergence_window,
            record_gains: false,
        }
    }
}

/// Parses a task config from TOML text. Parse errors cite line numbers.
pub fn parse_task_config(text: &str) -> Result<TaskConfig, ConfigError> {
    let cfg: TaskConfig = toml::from_str(text)?;
    Ok(cfg)
}

/// Reads, parses and builds a task from a file path.
pub fn load_task(path: &std::path::Path) -> Result<TaskDefinition, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    build_task(&parse_task_config(&text)?)
}

/// Builds and validates a task from parsed config.
pub fn build_task(cfg: &TaskConfig) -> Result<TaskDefinition, ConfigError> {
    systems::build_task(cfg)
}
