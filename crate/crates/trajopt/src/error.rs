use thiserror::Error;

/// Errors produced by the solvers and their building blocks.
#[derive(Debug, Clone, Error)]
pub enum SolveError {
    #[error("Q_uu could not be regularized to positive definite at timestep {timestep} (mu capped at {max_mu:.0e})")]
    RegularizationFailed { timestep: usize, max_mu: f64 },

    #[error("rollout diverged to a non-finite state at timestep {timestep}")]
    DivergedRollout { timestep: usize },

    #[error("non-finite {what} at timestep {timestep}")]
    NonFinite {
        what: &'static str,
        timestep: usize,
    },

    #[error("policy covariance at timestep {timestep} is not positive definite")]
    CovarianceNotPd { timestep: usize },

    #[error("trajectory has {got} controls but the task horizon is {expected}")]
    HorizonMismatch { expected: usize, got: usize },
}

/// Errors from reading and validating task configuration files.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// TOML syntax or type errors; the message cites line and column.
    #[error("{0}")]
    Parse(#[from] toml::de::Error),

    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("unknown dynamics id `{0}` (expected pointmass, car, quadcopter or manipulator)")]
    UnknownDynamics(String),
}

impl ConfigError {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
