//! Unimodal maximum-entropy DDP.
//!
//! Two slots are kept: slot 0 always holds the lowest-cost trajectory seen
//! (the elite), slot 1 explores. Every `resample_every` iterations the
//! elite is re-selected deterministically and the explorer is redrawn from
//! the elite's Gaussian policy by sampling the entire feedforward offset
//! sequence up front and applying the deterministic feedback on the way.

use nalgebra::{Cholesky, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::ddp::{LocalPolicy, Trajectory};
use crate::error::SolveError;
use crate::modes::{run_mode_solver, ModeEngine, Weighting};
use crate::task::TaskDefinition;

pub use crate::modes::{ModeSlot, DEGENERATE_ALPHA};

/// Draws zero-mean feedforward offsets `eps_t ~ N(0, Sigma_t)` for every
/// timestep, all up front, via the Cholesky factor of each covariance.
///
/// An exactly-zero covariance yields an exactly-zero offset (the degenerate
/// Gaussian); any other non-positive-definite covariance is an error.
pub fn sample_feedforward<R: Rng>(
    policy: &LocalPolicy,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>, SolveError> {
    let mut offsets = Vec::with_capacity(policy.horizon());
    for (t, sigma) in policy.covariance.iter().enumerate() {
        let n_u = sigma.nrows();
        if sigma.iter().all(|v| *v == 0.0) {
            offsets.push(DVector::zeros(n_u));
            continue;
        }
        let chol =
            Cholesky::new(sigma.clone()).ok_or(SolveError::CovarianceNotPd { timestep: t })?;
        let z = DVector::from_fn(n_u, |_, _| rng.sample(StandardNormal));
        offsets.push(chol.l() * z);
    }
    Ok(offsets)
}

/// Elite/explorer pair with per-slot RNG streams.
///
/// Invariants: slot 0 holds the lowest-cost trajectory seen after every
/// [`SolverState::resample_step`], and the whole evolution is a pure
/// function of the task and its seed.
pub struct SolverState {
    engine: ModeEngine,
}

impl SolverState {
    /// Both slots start from the zero-control rollout.
    pub fn new(task: &TaskDefinition) -> Result<Self, SolveError> {
        Ok(SolverState {
            engine: ModeEngine::new(task, 2, Weighting::EliteOnly)?,
        })
    }

    pub fn slots(&self) -> &[ModeSlot] {
        &self.engine.slots
    }

    pub fn iteration(&self) -> usize {
        self.engine.iteration
    }

    /// The elite slot (lowest cost, ties broken by lowest index).
    pub fn elite(&self) -> &ModeSlot {
        &self.engine.slots[self.engine.elite_index()]
    }

    /// Copies the lowest-cost slot's data into slot 0 and redraws slot 1
    /// from the elite policy with sampled feedforward noise. Intended to run
    /// when the iteration count hits the resample period.
    pub fn resample_step(&mut self, task: &TaskDefinition) -> Result<(), SolveError> {
        self.engine.resample(task)
    }

    /// One backward pass + line search on each slot.
    pub fn iterate(&mut self, task: &TaskDefinition) -> Result<(), SolveError> {
        self.engine.step_slots(task)?;
        self.engine.iteration += 1;
        Ok(())
    }
}

/// Result of [`solve_me`].
pub struct MeRun {
    pub best: Trajectory,
    /// Minimum cost over both slots per iteration; entry 0 is the initial
    /// rollout. Non-increasing.
    pub min_trace: Vec<f64>,
    pub slot_traces: Vec<Vec<f64>>,
    /// Per-iteration elite-slot policies when `record_gains` is set.
    pub elite_gains: Option<Vec<LocalPolicy>>,
}

/// Unimodal maximum-entropy DDP over `iterations` iterations with resample
/// period `resample_every`. Output is a pure function of `(task, seed)`.
pub fn solve_me(task: &TaskDefinition) -> Result<MeRun, SolveError> {
    let run = run_mode_solver(task, 2, Weighting::EliteOnly)?;
    Ok(MeRun {
        best: run.best,
        min_trace: run.min_trace,
        slot_traces: run.slot_traces,
        elite_gains: run.elite_gains,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::GoalCost;
    use crate::ddp::{backward_pass, initial_rollout, solve_vanilla, SolveMode};
    use crate::systems::LinearSystem;
    use crate::task::SolverOptions;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn lqr_task(alpha: f64, seed: u64) -> TaskDefinition {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.005, 0.1]);
        let cost = GoalCost::quadratic(
            DVector::zeros(2),
            DVector::from_vec(vec![1.0, 0.1]),
            DVector::from_vec(vec![0.1]),
            DVector::from_vec(vec![10.0, 1.0]),
        );
        TaskDefinition::new(
            "lqr-2d",
            Arc::new(LinearSystem::new(a, b)),
            Arc::new(cost),
            20,
            DVector::from_vec(vec![1.0, 0.0]),
            SolverOptions {
                alpha,
                seed,
                iterations: 40,
                ..SolverOptions::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_covariance_samples_zero_offsets() {
        let policy = LocalPolicy::zeros(2, 1, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let eps = sample_feedforward(&policy, &mut rng).unwrap();
        for e in eps {
            assert_eq!(e, DVector::zeros(1));
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let mut policy = LocalPolicy::zeros(2, 2, 4);
        for sigma in policy.covariance.iter_mut() {
            *sigma = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3]);
        }
        let mut rng_a = ChaCha8Rng::seed_from_u64(9);
        let mut rng_b = ChaCha8Rng::seed_from_u64(9);
        let eps_a = sample_feedforward(&policy, &mut rng_a).unwrap();
        let eps_b = sample_feedforward(&policy, &mut rng_b).unwrap();
        assert_eq!(eps_a, eps_b);
    }

    #[test]
    fn empirical_covariance_matches_identity() {
        let mut policy = LocalPolicy::zeros(2, 2, 1);
        policy.covariance[0] = DMatrix::identity(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 100_000;
        let mut sum = DVector::zeros(2);
        let mut outer = DMatrix::zeros(2, 2);
        for _ in 0..n {
            let eps = &sample_feedforward(&policy, &mut rng).unwrap()[0];
            sum += eps;
            outer += eps * eps.transpose();
        }
        let mean = sum / n as f64;
        let cov = outer / n as f64 - &mean * mean.transpose();
        let err = (&cov - DMatrix::identity(2, 2)).norm() / DMatrix::<f64>::identity(2, 2).norm();
        assert!(err < 0.05, "relative Frobenius error {err}");
    }

    #[test]
    fn nonzero_indefinite_covariance_is_rejected() {
        let mut policy = LocalPolicy::zeros(1, 2, 1);
        policy.covariance[0] = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_feedforward(&policy, &mut rng),
            Err(SolveError::CovarianceNotPd { timestep: 0 })
        ));
    }

    #[test]
    fn resample_with_zero_covariance_is_a_no_op() {
        let task = lqr_task(0.1, 0);
        let mut state = SolverState::new(&task).unwrap();
        // Policies are still all-zero, so the explorer draw copies the elite.
        let before: Vec<f64> = state.slots().iter().map(ModeSlot::cost).collect();
        state.resample_step(&task).unwrap();
        let after: Vec<f64> = state.slots().iter().map(ModeSlot::cost).collect();
        assert_eq!(before, after);
        assert_eq!(state.slots()[0].traj, state.slots()[1].traj);
    }

    #[test]
    fn resample_moves_the_elite_into_slot_zero() {
        let task = lqr_task(0.1, 3);
        let mut state = SolverState::new(&task).unwrap();
        state.iterate(&task).unwrap();
        // Degrade slot 0 so the elite sits in slot 1.
        state.engine.slots.swap(0, 1);
        let mut worse = state.engine.slots[0].traj.clone();
        worse.cost += 100.0;
        state.engine.slots[0].traj = worse;
        let elite_cost = state.slots()[1].cost();
        state.resample_step(&task).unwrap();
        assert_eq!(state.slots()[0].cost(), elite_cost);
    }

    #[test]
    fn explorer_noise_increases_cost_at_the_optimum_on_average() {
        // Converge first, then resample under many seeds; at the optimum the
        // sampled noise cannot decrease cost in expectation.
        let mut higher = 0;
        let total = 100;
        for seed in 0..total {
            let task = lqr_task(0.1, seed);
            let mut state = SolverState::new(&task).unwrap();
            for _ in 0..20 {
                state.iterate(&task).unwrap();
            }
            let elite_cost = state.elite().cost();
            state.resample_step(&task).unwrap();
            if state.slots()[1].cost() >= elite_cost {
                higher += 1;
            }
        }
        assert!(higher > 60, "only {higher}/{total} explorer draws cost more");
    }

    #[test]
    fn degenerate_alpha_reproduces_vanilla_bitwise() {
        let mut task = lqr_task(1e-12, 7);
        task.solver.record_gains = true;
        let me = solve_me(&task).unwrap();
        let vanilla = solve_vanilla(&task).unwrap();
        let common = vanilla.trace.len().min(me.min_trace.len());
        for k in 0..common {
            assert_eq!(me.min_trace[k], vanilla.trace[k], "iteration {k}");
        }
        let me_gains = me.elite_gains.unwrap();
        let van_gains = vanilla.gains.unwrap();
        for (mg, vg) in me_gains.iter().zip(&van_gains) {
            for t in 0..task.horizon {
                assert_eq!(mg.feedforward[t], vg.feedforward[t]);
                assert_eq!(mg.feedback[t], vg.feedback[t]);
            }
        }
    }

    #[test]
    fn me_matches_vanilla_cost_on_lqr() {
        let task = lqr_task(0.1, 11);
        let me = solve_me(&task).unwrap();
        let vanilla = solve_vanilla(&task).unwrap();
        assert_relative_eq!(me.best.cost, vanilla.best.cost, epsilon = 1e-6);
    }

    #[test]
    fn min_trace_is_monotone_and_seed_deterministic() {
        let task = lqr_task(0.5, 21);
        let run_a = solve_me(&task).unwrap();
        let run_b = solve_me(&task).unwrap();
        assert_eq!(run_a.min_trace, run_b.min_trace);
        for w in run_a.min_trace.windows(2) {
            assert!(w[1] <= w[0], "trace increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn sampled_controls_match_policy_marginal_at_t0() {
        // Freeze a policy after a few iterations, then check the first
        // sampled control against its Gaussian marginal.
        let task = lqr_task(0.5, 2);
        let traj = initial_rollout(&task).unwrap();
        let bp = backward_pass(&traj, &task, SolveMode::MaxEnt { alpha: 0.5 }).unwrap();
        let expected_mean = &traj.controls[0] + &bp.policy.feedforward[0];
        let sigma0 = bp.policy.covariance[0].clone();

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mut sum = DVector::zeros(1);
        let mut outer = DMatrix::zeros(1, 1);
        for _ in 0..n {
            let eps = &sample_feedforward(&bp.policy, &mut rng).unwrap()[0];
            let u0 = &expected_mean + eps;
            sum += &u0;
            outer += &u0 * u0.transpose();
        }
        let mean = sum / n as f64;
        let cov = outer / n as f64 - &mean * mean.transpose();
        let mean_err = (&mean - &expected_mean).norm();
        assert!(mean_err < 0.02 * sigma0.trace().sqrt(), "mean error {mean_err}");
        let cov_err = (&cov - &sigma0).norm() / sigma0.norm();
        assert!(cov_err < 0.05, "covariance error {cov_err}");
    }
}
