//! Multimodal maximum-entropy DDP.
//!
//! `N` modes are optimized in parallel, each with its own terminal
//! expansion around its own nominal. The mixture policy weights come from a
//! stable softmax over `-(J + V_H) / alpha`, and explorer slots are redrawn
//! by a categorical component choice followed by Gaussian feedforward
//! noise. The composed (log-sum-exp) value is exposed for diagnostics.

use crate::ddp::{LocalPolicy, Trajectory};
use crate::error::SolveError;
use crate::modes::{run_mode_solver, ModeEngine, ModeSlot, Weighting};
use crate::task::TaskDefinition;

/// Soft minimum `-alpha ln sum_n exp(-v_n / alpha)` with max subtraction.
///
/// Bounded by `min(v) - alpha ln N <= result <= min(v)`, permutation
/// invariant, and non-increasing in `alpha`.
pub fn compose_value(values: &[f64], alpha: f64) -> f64 {
    assert!(!values.is_empty(), "need at least one component");
    assert!(alpha > 0.0, "inverse temperature must be positive");
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let sum: f64 = values.iter().map(|v| (-(v - min) / alpha).exp()).sum();
    min - alpha * sum.ln()
}

/// Log-sum-exp composition of per-mode terminal costs evaluated at one
/// state; same contract as [`compose_value`].
pub fn compose_terminal_value(terminal_costs: &[f64], alpha: f64) -> f64 {
    compose_value(terminal_costs, alpha)
}

/// Mixture weights `w_n` from per-mode costs and entropy accumulators: a
/// softmax over `-(J_n + V_H_n) / alpha` with max subtraction and exact
/// normalization.
pub fn compute_weights(costs: &[f64], entropies: &[f64], alpha: f64) -> Vec<f64> {
    assert_eq!(costs.len(), entropies.len());
    assert!(!costs.is_empty(), "need at least one mode");
    assert!(alpha > 0.0, "inverse temperature must be positive");
    let scores: Vec<f64> = costs
        .iter()
        .zip(entropies)
        .map(|(j, v_h)| -(j + v_h) / alpha)
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `N` modes with mixture weights; the Gaussian-mixture policy state.
///
/// Invariants: weights sum to one, and slot 0 holds the minimum-cost mode
/// after every [`ModeSet::resample_modes`].
pub struct ModeSet {
    engine: ModeEngine,
}

impl ModeSet {
    /// All `task.solver.modes` slots start from the zero-control rollout
    /// with uniform weights.
    pub fn new(task: &TaskDefinition) -> Result<Self, SolveError> {
        Ok(ModeSet {
            engine: ModeEngine::new(task, task.solver.modes, Weighting::Desirability)?,
        })
    }

    pub fn slots(&self) -> &[ModeSlot] {
        &self.engine.slots
    }

    pub fn weights(&self) -> &[f64] {
        &self.engine.weights
    }

    pub fn iteration(&self) -> usize {
        self.engine.iteration
    }

    /// Moves the minimum-cost mode into slot 0 and redraws slots `1..N`
    /// from the mixture: component index from a categorical draw over the
    /// weights, then feedforward noise from that component's policy.
    pub fn resample_modes(&mut self, task: &TaskDefinition) -> Result<(), SolveError> {
        self.engine.resample(task)
    }

    /// One backward pass + line search per mode, then a weight update.
    pub fn iterate(&mut self, task: &TaskDefinition) -> Result<(), SolveError> {
        self.engine.step_slots(task)?;
        self.engine.iteration += 1;
        Ok(())
    }
}

/// Result of [`solve_mme`].
pub struct MmeRun {
    pub best: Trajectory,
    /// Minimum cost over all modes per iteration; entry 0 is the initial
    /// rollout. Non-increasing.
    pub min_trace: Vec<f64>,
    pub mode_traces: Vec<Vec<f64>>,
    /// Mixture weights after each iteration.
    pub weight_history: Vec<Vec<f64>>,
    /// Per-iteration elite-slot policies when `record_gains` is set.
    pub elite_gains: Option<Vec<LocalPolicy>>,
}

/// Multimodal maximum-entropy DDP with `task.solver.modes` mixture
/// components. Output is a pure function of `(task, seed)`.
pub fn solve_mme(task: &TaskDefinition) -> Result<MmeRun, SolveError> {
    let run = run_mode_solver(task, task.solver.modes, Weighting::Desirability)?;
    Ok(MmeRun {
        best: run.best,
        min_trace: run.min_trace,
        mode_traces: run.slot_traces,
        weight_history: run.weight_history,
        elite_gains: run.elite_gains,
    })
}
