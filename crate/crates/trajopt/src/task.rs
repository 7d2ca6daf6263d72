//! Task definitions: dynamics, cost, horizon, initial state and solver
//! options bundled for the solvers.

use std::sync::Arc;

use nalgebra::DVector;

use crate::cost::Cost;
use crate::dynamics::Dynamics;
use crate::error::ConfigError;

/// Solver configuration shared by all three solvers. Vanilla DDP ignores
/// `alpha`, `modes` and `resample_every`.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Inverse temperature; must be positive for the max-entropy solvers.
    pub alpha: f64,
    /// Gaussian mixture component count `N` for the multimodal solver.
    pub modes: usize,
    /// Resample period `m`: exploration noise is injected every `m`
    /// iterations.
    pub resample_every: usize,
    /// Iteration budget `K`.
    pub iterations: usize,
    pub seed: u64,
    /// Number of backtracking step scales `eta = 2^0, 2^-1, ...`.
    pub line_search_steps: usize,
    /// Vanilla DDP stops once the relative cost decrease over
    /// `convergence_window` iterations falls below this.
    pub convergence_tol: f64,
    pub convergence_window: usize,
    /// Record the per-iteration gains of the (elite) backward pass; used by
    /// diagnostics and tests.
    pub record_gains: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            alpha: 0.1,
            modes: 4,
            resample_every: 8,
            iterations: 100,
            seed: 0,
            line_search_steps: 11,
            convergence_tol: 1e-9,
            convergence_window: 5,
            record_gains: false,
        }
    }
}

/// A complete problem instance for the solvers.
pub struct TaskDefinition {
    pub id: String,
    pub dynamics: Arc<dyn Dynamics>,
    pub cost: Arc<dyn Cost>,
    /// Horizon `T` in steps; trajectories hold `T + 1` states.
    pub horizon: usize,
    pub x0: DVector<f64>,
    pub solver: SolverOptions,
}

impl TaskDefinition {
    pub fn new(
        id: impl Into<String>,
        dynamics: Arc<dyn Dynamics>,
        cost: Arc<dyn Cost>,
        horizon: usize,
        x0: DVector<f64>,
        solver: SolverOptions,
    ) -> Result<Self, ConfigError> {
        let task = TaskDefinition {
            id: id.into(),
            dynamics,
            cost,
            horizon,
            x0,
            solver,
        };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.horizon < 1 {
            return Err(ConfigError::invalid("horizon", "must be at least 1"));
        }
        if self.x0.len() != self.dynamics.state_dim() {
            return Err(ConfigError::invalid(
                "x0",
                format!(
                    "length {} does not match state dimension {}",
                    self.x0.len(),
                    self.dynamics.state_dim()
                ),
            ));
        }
        if !self.x0.iter().all(|v| v.is_finite()) {
            return Err(ConfigError::invalid("x0", "entries must be finite"));
        }
        let s = &self.solver;
        if !(s.alpha > 0.0) {
            return Err(ConfigError::invalid("solver.alpha", "must be positive"));
        }
        if s.modes < 1 {
            return Err(ConfigError::invalid("solver.modes", "must be at least 1"));
        }
        if s.resample_every < 1 {
            return Err(ConfigError::invalid(
                "solver.resample_every",
                "must be at least 1",
            ));
        }
        if s.iterations < 1 {
            return Err(ConfigError::invalid(
                "solver.iterations",
                "must be at least 1",
            ));
        }
        if s.line_search_steps < 1 {
            return Err(ConfigError::invalid(
                "solver.line_search_steps",
                "must be at least 1",
            ));
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        self.dynamics.state_dim()
    }

    pub fn control_dim(&self) -> usize {
        self.dynamics.control_dim()
    }

    /// Same task with a different RNG seed.
    pub fn with_seed(&self, seed: u64) -> TaskDefinition {
        TaskDefinition {
            id: self.id.clone(),
            dynamics: Arc::clone(&self.dynamics),
            cost: Arc::clone(&self.cost),
            horizon: self.horizon,
            x0: self.x0.clone(),
            solver: SolverOptions {
                seed,
                ..self.solver.clone()
            },
        }
    }
}
