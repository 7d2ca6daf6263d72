//! Shared engine behind the unimodal and multimodal max-entropy solvers:
//! N mode slots, periodic resampling with elite preservation, and per-slot
//! backward pass + line search updates.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ddp::{
    backward_pass, initial_rollout, line_search, rollout, LocalPolicy, SolveMode, Trajectory,
};
use crate::error::SolveError;
use crate::me::sample_feedforward;
use crate::mme::compute_weights;
use crate::task::TaskDefinition;

/// Inverse temperatures at or below this are treated as the deterministic
/// limit when sampling: the policy covariance `alpha Quu^-1` is numerically
/// degenerate and exploration offsets are exactly zero, so the solvers
/// reduce to vanilla DDP bit for bit.
pub const DEGENERATE_ALPHA: f64 = 1e-12;

const RESAMPLE_RETRIES: usize = 5;

/// One nominal trajectory with its local policy and entropy accumulator.
#[derive(Debug, Clone)]
pub struct ModeSlot {
    pub traj: Trajectory,
    pub policy: LocalPolicy,
    /// Entropy accumulator `V_H` from the latest accepted backward pass.
    pub v_h: f64,
}

impl ModeSlot {
    pub fn cost(&self) -> f64 {
        self.traj.cost
    }
}

/// How explorer slots pick the component they resample from.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Weighting {
    /// Always the lowest-cost mode (unimodal solver).
    EliteOnly,
    /// Categorical draw over desirability weights (multimodal solver).
    Desirability,
}

pub(crate) struct ModeEngine {
    pub slots: Vec<ModeSlot>,
    pub weights: Vec<f64>,
    pub iteration: usize,
    rngs: Vec<ChaCha8Rng>,
    weighting: Weighting,
}

pub(crate) struct EngineRun {
    pub best: Trajectory,
    pub min_trace: Vec<f64>,
    pub slot_traces: Vec<Vec<f64>>,
    pub weight_history: Vec<Vec<f64>>,
    pub elite_gains: Option<Vec<LocalPolicy>>,
}

impl ModeEngine {
    pub fn new(
        task: &TaskDefinition,
        n_modes: usize,
        weighting: Weighting,
    ) -> Result<Self, SolveError> {
        assert!(n_modes >= 1, "need at least one mode");
        let init = initial_rollout(task)?;
        let slot = ModeSlot {
            traj: init,
            policy: LocalPolicy::zeros(task.state_dim(), task.control_dim(), task.horizon),
            v_h: 0.0,
        };
        Ok(ModeEngine {
            slots: vec![slot; n_modes],
            weights: vec![1.0 / n_modes as f64; n_modes],
            iteration: 0,
            rngs: slot_rngs(task.solver.seed, n_modes),
            weighting,
        })
    }

    pub fn elite_index(&self) -> usize {
        argmin_cost(&self.slots)
    }

    pub fn min_cost(&self) -> f64 {
        self.slots[self.elite_index()].cost()
    }

    /// Moves the lowest-cost mode into slot 0 (deterministic controls, no
    /// noise) and redraws every other slot from the pre-resample components:
    /// a categorical component choice followed by Gaussian feedforward
    /// offsets, rolled out with the full feedforward applied. A draw that
    /// diverges is retried up to 5 times, then falls back to an elite copy.
    pub fn resample(&mut self, task: &TaskDefinition) -> Result<(), SolveError> {
        let elite_idx = self.elite_index();
        let components = self.slots.clone();
        self.slots[0] = components[elite_idx].clone();
        for n in 1..self.slots.len() {
            self.slots[n] = draw_explorer(
                task,
                &components,
                &self.weights,
                self.weighting,
                elite_idx,
                &mut self.rngs[n],
            )?;
        }
        Ok(())
    }

    /// One backward pass + line search per slot. A slot whose `Q_uu`
    /// regularization fails is frozen for the iteration instead of aborting
    /// the run. Returns the updated per-slot costs.
    pub fn step_slots(&mut self, task: &TaskDefinition) -> Result<(), SolveError> {
        let alpha = task.solver.alpha;
        for slot in self.slots.iter_mut() {
            match backward_pass(&slot.traj, task, SolveMode::MaxEnt { alpha }) {
                Ok(bp) => {
                    slot.policy = bp.policy;
                    slot.v_h = bp.value.entropy;
                    let (next, _accepted) = line_search(task, &slot.traj, &slot.policy);
                    slot.traj = next;
                }
                Err(SolveError::RegularizationFailed { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        self.weights = match self.weighting {
            Weighting::Desirability => {
                let costs: Vec<f64> = self.slots.iter().map(ModeSlot::cost).collect();
                let entropies: Vec<f64> = self.slots.iter().map(|s| s.v_h).collect();
                compute_weights(&costs, &entropies, alpha)
            }
            Weighting::EliteOnly => {
                let mut w = vec![0.0; self.slots.len()];
                w[self.elite_index()] = 1.0;
                w
            }
        };
        Ok(())
    }
}

/// Full solve loop shared by the ME and MME entry points.
pub(crate) fn run_mode_solver(
    task: &TaskDefinition,
    n_modes: usize,
    weighting: Weighting,
) -> Result<EngineRun, SolveError> {
    let mut engine = ModeEngine::new(task, n_modes, weighting)?;
    let mut min_trace = vec![engine.min_cost()];
    let mut slot_traces: Vec<Vec<f64>> = engine.slots.iter().map(|s| vec![s.cost()]).collect();
    let mut weight_history = Vec::new();
    let mut elite_gains = task.solver.record_gains.then(Vec::new);

    for k in 1..=task.solver.iterations {
        if k % task.solver.resample_every == 0 {
            engine.resample(task)?;
        }
        engine.step_slots(task)?;
        engine.iteration = k;

        if let Some(g) = &mut elite_gains {
            g.push(engine.slots[0].policy.clone());
        }
        min_trace.push(engine.min_cost());
        for (trace, slot) in slot_traces.iter_mut().zip(&engine.slots) {
            trace.push(slot.cost());
        }
        weight_history.push(engine.weights.clone());
    }

    let best = engine.slots[engine.elite_index()].traj.clone();
    Ok(EngineRun {
        best,
        min_trace,
        slot_traces,
        weight_history,
        elite_gains,
    })
}

fn draw_explorer(
    task: &TaskDefinition,
    components: &[ModeSlot],
    weights: &[f64],
    weighting: Weighting,
    elite_idx: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ModeSlot, SolveError> {
    for _ in 0..RESAMPLE_RETRIES {
        let c = match weighting {
            Weighting::EliteOnly => elite_idx,
            Weighting::Desirability => categorical(weights, rng),
        };
        let component = &components[c];
        let noise = exploration_noise(task, &component.policy, rng)?;
        match rollout(task, &component.traj, &component.policy, 1.0, Some(&noise)) {
            Ok(traj) => {
                return Ok(ModeSlot {
                    traj,
                    policy: component.policy.clone(),
                    v_h: component.v_h,
                })
            }
            Err(SolveError::DivergedRollout { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(components[elite_idx].clone())
}

/// Feedforward exploration offsets; exactly zero in the degenerate
/// inverse-temperature limit.
fn exploration_noise(
    task: &TaskDefinition,
    policy: &LocalPolicy,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<DVector<f64>>, SolveError> {
    if task.solver.alpha <= DEGENERATE_ALPHA {
        return Ok(vec![DVector::zeros(task.control_dim()); task.horizon]);
    }
    sample_feedforward(policy, rng)
}

/// Per-slot RNG streams split from the master seed, so concurrent slot
/// execution cannot perturb determinism.
fn slot_rngs(seed: u64, n: usize) -> Vec<ChaCha8Rng> {
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            rng
        })
        .collect()
}

pub(crate) fn argmin_cost(slots: &[ModeSlot]) -> usize {
    let mut best = 0;
    for (i, slot) in slots.iter().enumerate().skip(1) {
        if slot.cost() < slots[best].cost() {
            best = i;
        }
    }
    best
}

pub(crate) fn categorical(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    use rand::Rng;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}
