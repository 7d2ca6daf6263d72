//! Benchmark dynamics and cost models, plus construction from parsed
//! config.

pub mod car;
pub mod linear;
pub mod manipulator;
pub mod point_mass;
pub mod quadcopter;

pub use car::Car;
pub use linear::LinearSystem;
pub use manipulator::{forward_kinematics, KinematicChain, ManipulatorArm, ManipulatorCost};
pub use point_mass::PointMass;
pub use quadcopter::Quadcopter;

use std::sync::Arc;

use nalgebra::{DVector, Vector3};

use crate::config::TaskConfig;
use crate::cost::{Cost, GoalCost, Obstacle};
use crate::dynamics::{Dynamics, Rk4};
use crate::error::ConfigError;
use crate::task::TaskDefinition;

/// The task ids shipped with the benchmark harness.
pub const TASK_DYNAMICS: [&str; 4] = ["pointmass", "car", "quadcopter", "manipulator"];

/// Builds a validated [`TaskDefinition`] from parsed config.
pub fn build_task(cfg: &TaskConfig) -> Result<TaskDefinition, ConfigError> {
    if cfg.dt <= 0.0 || !cfg.dt.is_finite() {
        return Err(ConfigError::invalid("dt", "must be positive and finite"));
    }
    let (dynamics, cost): (Arc<dyn Dynamics>, Arc<dyn Cost>) = match cfg.dynamics.as_str() {
        "pointmass" => {
            let model = PointMass::new(cfg.dt);
            let cost = goal_cost(cfg, &model, 2)?;
            (Arc::new(model), Arc::new(cost))
        }
        "car" => {
            let model = Rk4::new(Car, cfg.dt);
            let cost = goal_cost(cfg, &model, 2)?;
            (Arc::new(model), Arc::new(cost))
        }
        "quadcopter" => {
            let model = Rk4::new(Quadcopter::default(), cfg.dt);
            let cost = goal_cost(cfg, &model, 3)?;
            (Arc::new(model), Arc::new(cost))
        }
        "manipulator" => {
            let mut arm = ManipulatorArm::default();
            if let Some(inertias) = &cfg.joint_inertias {
                let v = check_len("joint_inertias", inertias, manipulator::JOINT_COUNT)?;
                if v.iter().any(|i| *i <= 0.0) {
                    return Err(ConfigError::invalid("joint_inertias", "must be positive"));
                }
                arm.joint_inertias.copy_from_slice(v.as_slice());
            }
            let chain = arm.chain;
            let cost = manipulator_cost(cfg, chain)?;
            (Arc::new(Rk4::new(arm, cfg.dt)), Arc::new(cost))
        }
        other => return Err(ConfigError::UnknownDynamics(other.to_string())),
    };

    TaskDefinition::new(
        cfg.id.clone(),
        dynamics,
        cost,
        cfg.horizon,
        DVector::from_vec(cfg.x0.clone()),
        cfg.solver.to_options(),
    )
}

fn goal_cost(
    cfg: &TaskConfig,
    model: &dyn Dynamics,
    position_dims: usize,
) -> Result<GoalCost, ConfigError> {
    let n_x = model.state_dim();
    let n_u = model.control_dim();
    let goal = check_len("goal", &cfg.goal, n_x)?;
    let state_weights = match &cfg.cost.state_weights {
        Some(w) => check_len("cost.state_weights", w, n_x)?,
        None => DVector::zeros(n_x),
    };
    let control_weights = check_len("cost.control_weights", &cfg.cost.control_weights, n_u)?;
    let terminal_weights = match &cfg.cost.terminal_weights {
        Some(w) => check_len("cost.terminal_weights", w, n_x)?,
        None => DVector::zeros(n_x),
    };
    let control_reference = match &cfg.cost.control_reference {
        Some(r) => check_len("cost.control_reference", r, n_u)?,
        None => DVector::zeros(n_u),
    };
    Ok(GoalCost {
        goal,
        state_weights,
        control_weights,
        terminal_weights,
        control_reference,
        obstacles: obstacles(cfg, position_dims)?,
        position_dims,
    })
}

fn manipulator_cost(cfg: &TaskConfig, chain: KinematicChain) -> Result<ManipulatorCost, ConfigError> {
    let goal = check_len("goal", &cfg.goal, 3)?;
    let control_weights = check_len(
        "cost.control_weights",
        &cfg.cost.control_weights,
        manipulator::JOINT_COUNT,
    )?;
    Ok(ManipulatorCost {
        chain,
        goal: Vector3::new(goal[0], goal[1], goal[2]),
        ee_weight: cfg.cost.ee_weight.unwrap_or(0.0),
        ee_terminal_weight: cfg.cost.ee_terminal_weight.unwrap_or(0.0),
        velocity_weight: cfg.cost.velocity_weight.unwrap_or(0.0),
        velocity_terminal_weight: cfg.cost.velocity_terminal_weight.unwrap_or(0.0),
        control_weights,
        obstacles: obstacles(cfg, 3)?,
    })
}

fn obstacles(cfg: &TaskConfig, position_dims: usize) -> Result<Vec<Obstacle>, ConfigError> {
    cfg.obstacles
        .iter()
        .map(|o| {
            if o.center.is_empty() || o.center.len() > position_dims {
                return Err(ConfigError::invalid(
                    "obstacle.center",
                    format!(
                        "length must be between 1 and {position_dims} for this system, got {}",
                        o.center.len()
                    ),
                ));
            }
            if !(o.radius > 0.0) {
                return Err(ConfigError::invalid("obstacle.radius", "must be positive"));
            }
            if !o.weight.is_finite() {
                return Err(ConfigError::invalid("obstacle.weight", "must be finite"));
            }
            Ok(Obstacle::new(
                DVector::from_vec(o.center.clone()),
                o.radius,
                o.weight,
            ))
        })
        .collect()
}

fn check_len(field: &str, values: &[f64], expected: usize) -> Result<DVector<f64>, ConfigError> {
    if values.len() != expected {
        return Err(ConfigError::invalid(
            field,
            format!("expected {expected} entries, got {}", values.len()),
        ));
    }
    if !values.iter().all(|v| v.is_finite()) {
        return Err(ConfigError::invalid(field, "entries must be finite"));
    }
    Ok(DVector::from_vec(values.to_vec()))
}
