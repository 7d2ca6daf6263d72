//! Trajectory optimization built on differential dynamic programming.
//!
//! The crate provides three solvers over a shared backward/forward pass:
//!
//! - [`ddp::solve_vanilla`]: deterministic DDP/iLQR with a backtracking
//!   line search.
//! - [`me::solve_me`]: maximum-entropy DDP. The backward pass additionally
//!   yields a Gaussian policy covariance `alpha * Quu^-1`; an elite slot and
//!   an explorer slot are kept, and the explorer is periodically resampled
//!   from the elite policy.
//! - [`mme::solve_mme`]: multimodal maximum-entropy DDP. `N` modes are
//!   optimized in parallel and resampled from a Gaussian mixture whose
//!   component weights come from the per-mode cost and entropy accumulator.
//!
//! Benchmark systems (2D point mass, car, quadcopter, 7-DOF manipulator)
//! live in [`systems`], and tasks are described by TOML configs parsed in
//! [`config`].

pub mod config;
pub mod cost;
pub mod ddp;
pub mod dynamics;
pub mod me;
pub mod mme;
mod modes;
pub mod systems;
pub mod task;

mod error;

pub use error::{ConfigError, SolveError};
pub use task::{SolverOptions, TaskDefinition};
