//! DDP/iLQR core: quadratic backward value recursion over a nominal
//! trajectory, adaptive Q_uu regularization, and a backtracking forward
//! pass. The max-entropy solvers reuse everything here; their backward pass
//! differs only in also producing a policy covariance and an entropy
//! accumulator.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::cost::{symmetrize, RunningExpansion};
use crate::error::SolveError;
use crate::task::TaskDefinition;

/// Backward-pass flavor: vanilla DDP or maximum entropy with inverse
/// temperature `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMode {
    Vanilla,
    MaxEnt { alpha: f64 },
}

/// Nominal state/control sequences with their realized cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `T + 1` states.
    pub states: Vec<DVector<f64>>,
    /// `T` controls.
    pub controls: Vec<DVector<f64>>,
    /// Realized cost of the pair.
    pub cost: f64,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.controls.len()
    }
}

/// Time-varying affine policy with a Gaussian covariance per timestep.
///
/// The control update is `u_t = u_bar_t + eta k_t + eps_t + K_t (x - x_bar_t)`;
/// `covariance[t]` is `alpha * Quu_t^-1` for the max-entropy backward pass
/// and the zero matrix for vanilla.
#[derive(Debug, Clone)]
pub struct LocalPolicy {
    pub feedforward: Vec<DVector<f64>>,
    pub feedback: Vec<DMatrix<f64>>,
    pub covariance: Vec<DMatrix<f64>>,
}

impl LocalPolicy {
    /// All-zero policy (identity rollout).
    pub fn zeros(n_x: usize, n_u: usize, horizon: usize) -> Self {
        LocalPolicy {
            feedforward: vec![DVector::zeros(n_u); horizon],
            feedback: vec![DMatrix::zeros(n_u, n_x); horizon],
            covariance: vec![DMatrix::zeros(n_u, n_u); horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.feedforward.len()
    }
}

/// Quadratic model of `Q = l + V' o f` at one timestep.
#[derive(Debug, Clone)]
pub struct QExpansion {
    pub qx: DVector<f64>,
    pub qu: DVector<f64>,
    pub qxx: DMatrix<f64>,
    pub qux: DMatrix<f64>,
    pub quu: DMatrix<f64>,
}

impl QExpansion {
    /// Assembles the stage expansion from the quadratized cost, linearized
    /// dynamics and next-step value expansion (iLQR form: second-order
    /// dynamics terms dropped).
    pub fn new(
        run: &RunningExpansion,
        fx: &DMatrix<f64>,
        fu: &DMatrix<f64>,
        vx: &DVector<f64>,
        vxx: &DMatrix<f64>,
    ) -> Self {
        let fxt = fx.transpose();
        let fut = fu.transpose();
        let fxt_vxx = &fxt * vxx;
        let fut_vxx = &fut * vxx;
        QExpansion {
            qx: &run.lx + &fxt * vx,
            qu: &run.lu + &fut * vx,
            qxx: symmetrize(&run.lxx + &fxt_vxx * fx),
            qux: &run.lux + &fut_vxx * fx,
            quu: symmetrize(&run.luu + &fut_vxx * fu),
        }
    }
}

/// Quadratic value expansion at one timestep, plus the scalar entropy
/// accumulator (zero for vanilla DDP).
#[derive(Debug, Clone)]
pub struct ValueExpansion {
    pub value: f64,
    pub vx: DVector<f64>,
    pub vxx: DMatrix<f64>,
    /// Accumulated Gaussian-policy entropy correction `V_H`.
    pub entropy: f64,
}

/// Output of [`backward_pass`]: the local policy and the value expansion at
/// `t = 0`.
#[derive(Debug, Clone)]
pub struct BackwardPass {
    pub policy: LocalPolicy,
    pub value: ValueExpansion,
}

const MU_MIN: f64 = 1e-6;
const MU_MAX: f64 = 1e6;

/// `Q_uu + mu I` with its Cholesky factor.
pub struct RegularizedQuu {
    pub matrix: DMatrix<f64>,
    pub chol: Cholesky<f64, Dyn>,
    pub mu: f64,
}

/// Shifts `Q_uu` by `mu I` until it admits a Cholesky factorization.
///
/// Starts at `mu0` (pass 0 to try the matrix unchanged), then escalates
/// through `1e-6, 1e-5, ..., 1e6`. Fails once the shift would exceed `1e6`.
pub fn regularize_quu(quu: &DMatrix<f64>, mu0: f64) -> Result<RegularizedQuu, SolveError> {
    let n = quu.nrows();
    let mut mu = mu0;
    loop {
        let mut shifted = quu.clone();
        for i in 0..n {
            shifted[(i, i)] += mu;
        }
        if let Some(chol) = Cholesky::new(shifted.clone()) {
            return Ok(RegularizedQuu {
                matrix: shifted,
                chol,
                mu,
            });
        }
        mu = if mu < MU_MIN { MU_MIN } else { mu * 10.0 };
        if mu > MU_MAX {
            return Err(SolveError::RegularizationFailed {
                timestep: 0,
                max_mu: MU_MAX,
            });
        }
    }
}

fn log_det_from_cholesky(chol: &Cholesky<f64, Dyn>) -> f64 {
    // ln|M| = 2 sum ln diag(L)
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Riccati-like backward sweep over the nominal trajectory.
///
/// For `t = T-1..0` the stage expansion is assembled from the quadratized
/// cost and linearized dynamics, `Q_uu` is regularized to positive definite,
/// and the gains are `k = -Quu^-1 Qu`, `K = -Quu^-1 Qux`. In max-entropy
/// mode the policy covariance `alpha Quu^-1` and the entropy accumulator
/// `V_H += alpha/2 (ln|Quu| - n_u ln(2 pi alpha))` are produced as well; the
/// gain and value updates are identical in both modes.
pub fn backward_pass(
    traj: &Trajectory,
    task: &TaskDefinition,
    mode: SolveMode,
) -> Result<BackwardPass, SolveError> {
    let horizon = traj.horizon();
    if horizon != task.horizon {
        return Err(SolveError::HorizonMismatch {
            expected: task.horizon,
            got: horizon,
        });
    }
    let n_x = task.state_dim();
    let n_u = task.control_dim();

    let term = task.cost.quadratize_terminal(&traj.states[horizon]);
    let mut value = term.phi;
    let mut vx = term.phi_x;
    let mut vxx = symmetrize(term.phi_xx);
    let mut v_h = 0.0;

    let mut policy = LocalPolicy::zeros(n_x, n_u, horizon);

    for t in (0..horizon).rev() {
        let x = &traj.states[t];
        let u = &traj.controls[t];
        let (fx, fu) = task.dynamics.linearize(x, u);
        if !(all_finite_mat(&fx) && all_finite_mat(&fu)) {
            return Err(SolveError::NonFinite {
                what: "dynamics jacobian",
                timestep: t,
            });
        }
        let run = task.cost.quadratize(x, u, t);
        let q = QExpansion::new(&run, &fx, &fu, &vx, &vxx);

        let reg = regularize_quu(&q.quu, 0.0).map_err(|_| SolveError::RegularizationFailed {
            timestep: t,
            max_mu: MU_MAX,
        })?;

        let k = -reg.chol.solve(&q.qu);
        let big_k = -reg.chol.solve(&q.qux);

        // Value recursion; identical to vanilla DDP in both modes.
        value += run.l + 0.5 * q.qu.dot(&k);
        let kt = big_k.transpose();
        vx = &q.qx + &kt * (&reg.matrix * &k) + &kt * &q.qu + q.qux.transpose() * &k;
        vxx = symmetrize(&q.qxx + &kt * (&reg.matrix * &big_k) + &kt * &q.qux + q.qux.transpose() * &big_k);

        if !(value.is_finite() && all_finite_vec(&vx) && all_finite_mat(&vxx)) {
            return Err(SolveError::NonFinite {
                what: "value expansion",
                timestep: t,
            });
        }

        if let SolveMode::MaxEnt { alpha } = mode {
            let sigma = symmetrize(reg.chol.inverse() * alpha);
            v_h += 0.5
                * alpha
                * (log_det_from_cholesky(&reg.chol)
                    - n_u as f64 * (2.0 * std::f64::consts::PI * alpha).ln());
            policy.covariance[t] = sigma;
        }

        policy.feedforward[t] = k;
        policy.feedback[t] = big_k;
    }

    Ok(BackwardPass {
        policy,
        value: ValueExpansion {
            value,
            vx,
            vxx,
            entropy: v_h,
        },
    })
}

/// Total cost `Phi(x_T) + sum_t l_t(x_t, u_t)` of a trajectory under the
/// task's cost model.
pub fn cost_eval(task: &TaskDefinition, traj: &Trajectory) -> Result<f64, SolveError> {
    if traj.controls.len() != task.horizon || traj.states.len() != task.horizon + 1 {
        return Err(SolveError::HorizonMismatch {
            expected: task.horizon,
            got: traj.controls.len(),
        });
    }
    let mut total = task.cost.terminal(&traj.states[task.horizon]);
    for t in 0..task.horizon {
        total += task.cost.running(&traj.states[t], &traj.controls[t], t);
    }
    Ok(total)
}

/// Forward pass: applies the policy around the previous nominal with step
/// scale `eta` on the feedforward and optional additive control offsets.
pub fn rollout(
    task: &TaskDefinition,
    prev: &Trajectory,
    policy: &LocalPolicy,
    eta: f64,
    noise: Option<&[DVector<f64>]>,
) -> Result<Trajectory, SolveError> {
    let horizon = task.horizon;
    assert_eq!(prev.horizon(), horizon, "nominal trajectory length mismatch");
    assert_eq!(policy.horizon(), horizon, "policy length mismatch");
    if let Some(eps) = noise {
        assert_eq!(eps.len(), horizon, "noise length mismatch");
    }

    let mut states = Vec::with_capacity(horizon + 1);
    let mut controls = Vec::with_capacity(horizon);
    let mut cost = 0.0;
    let mut x = prev.states[0].clone();

    for t in 0..horizon {
        let mut u = &prev.controls[t] + &policy.feedforward[t] * eta;
        u += &policy.feedback[t] * (&x - &prev.states[t]);
        if let Some(eps) = noise {
            u += &eps[t];
        }
        cost += task.cost.running(&x, &u, t);
        let next = task.dynamics.step(&x, &u);
        if !all_finite_vec(&next) {
            return Err(SolveError::DivergedRollout { timestep: t });
        }
        states.push(x);
        controls.push(u);
        x = next;
    }
    cost += task.cost.terminal(&x);
    states.push(x);

    if !cost.is_finite() {
        return Err(SolveError::DivergedRollout { timestep: horizon });
    }

    Ok(Trajectory {
        states,
        controls,
        cost,
    })
}

/// Rolls the dynamics from `task.x0` under fixed controls.
pub fn rollout_controls(
    task: &TaskDefinition,
    controls: &[DVector<f64>],
) -> Result<Trajectory, SolveError> {
    let horizon = task.horizon;
    assert_eq!(controls.len(), horizon, "controls length mismatch");
    let mut states = Vec::with_capacity(horizon + 1);
    let mut cost = 0.0;
    let mut x = task.x0.clone();
    for (t, u) in controls.iter().enumerate() {
        cost += task.cost.running(&x, u, t);
        let next = task.dynamics.step(&x, u);
        if !all_finite_vec(&next) {
            return Err(SolveError::DivergedRollout { timestep: t });
        }
        states.push(x);
        x = next;
    }
    cost += task.cost.terminal(&x);
    states.push(x);
    if !cost.is_finite() {
        return Err(SolveError::DivergedRollout { timestep: horizon });
    }
    Ok(Trajectory {
        states,
        controls: controls.to_vec(),
        cost,
    })
}

/// Zero-control rollout from the task's initial state.
pub fn initial_rollout(task: &TaskDefinition) -> Result<Trajectory, SolveError> {
    let controls = vec![DVector::zeros(task.control_dim()); task.horizon];
    rollout_controls(task, &controls)
}

/// Backtracking line search over `eta in {1, 1/2, 1/4, ...}` accepting the
/// first strict cost decrease. Returns the previous trajectory unchanged
/// (accepted = false) when no scale decreases the cost, so the output cost
/// never exceeds the input cost. Diverged rollouts count as rejections.
pub fn line_search(
    task: &TaskDefinition,
    prev: &Trajectory,
    policy: &LocalPolicy,
) -> (Trajectory, bool) {
    let mut eta = 1.0;
    for _ in 0..task.solver.line_search_steps {
        if let Ok(candidate) = rollout(task, prev, policy, eta, None) {
            if candidate.cost < prev.cost {
                return (candidate, true);
            }
        }
        eta *= 0.5;
    }
    (prev.clone(), false)
}

/// Result of [`solve_vanilla`].
pub struct VanillaRun {
    pub best: Trajectory,
    /// Realized cost per iteration; entry 0 is the initial rollout.
    pub trace: Vec<f64>,
    /// Per-iteration policies when `record_gains` is set.
    pub gains: Option<Vec<LocalPolicy>>,
}

/// Vanilla DDP: alternate backward pass and line search until the iteration
/// budget or until the relative cost decrease over the convergence window
/// drops below the tolerance. Deterministic; seeds are ignored.
pub fn solve_vanilla(task: &TaskDefinition) -> Result<VanillaRun, SolveError> {
    let mut traj = initial_rollout(task)?;
    let mut trace = vec![traj.cost];
    let mut gains = task.solver.record_gains.then(Vec::new);

    for _ in 1..=task.solver.iterations {
        let bp = backward_pass(&traj, task, SolveMode::Vanilla)?;
        if let Some(g) = &mut gains {
            g.push(bp.policy.clone());
        }
        let (next, _accepted) = line_search(task, &traj, &bp.policy);
        traj = next;
        trace.push(traj.cost);
        if converged(&trace, task.solver.convergence_tol, task.solver.convergence_window) {
            break;
        }
    }

    Ok(VanillaRun {
        best: traj,
        trace,
        gains,
    })
}

pub(crate) fn converged(trace: &[f64], tol: f64, window: usize) -> bool {
    if trace.len() <= window {
        return false;
    }
    let prev = trace[trace.len() - 1 - window];
    let cur = trace[trace.len() - 1];
    (prev - cur) / prev.abs().max(1e-300) < tol
}

pub(crate) fn all_finite_vec(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

pub(crate) fn all_finite_mat(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::GoalCost;
    use crate::systems::LinearSystem;
    use crate::task::SolverOptions;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    /// Scalar LQR task x' = a x + b u, l = q/2 x^2 + r/2 u^2, phi = qf/2 x^2.
    fn scalar_lqr(a: f64, b: f64, q: f64, r: f64, qf: f64, x0: f64, horizon: usize) -> TaskDefinition {
        let dynamics = LinearSystem::scalar(a, b);
        let cost = GoalCost::quadratic(
            DVector::from_vec(vec![0.0]),
            DVector::from_vec(vec![q]),
            DVector::from_vec(vec![r]),
            DVector::from_vec(vec![qf]),
        );
        TaskDefinition::new(
            "scalar-lqr",
            Arc::new(dynamics),
            Arc::new(cost),
            horizon,
            DVector::from_vec(vec![x0]),
            SolverOptions::default(),
        )
        .unwrap()
    }

    /// Independent finite-horizon Riccati recursion.
    fn riccati(
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        q: &DMatrix<f64>,
        r: &DMatrix<f64>,
        qf: &DMatrix<f64>,
        horizon: usize,
    ) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        let mut p = qf.clone();
        let mut gains = vec![DMatrix::zeros(b.ncols(), a.nrows()); horizon];
        let mut values = vec![DMatrix::zeros(a.nrows(), a.nrows()); horizon + 1];
        values[horizon] = p.clone();
        for t in (0..horizon).rev() {
            let btp = b.transpose() * &p;
            let quu = r + &btp * b;
            let gain = -quu.clone().try_inverse().unwrap() * (&btp * a);
            p = q + a.transpose() * &p * a + (a.transpose() * &p * b) * &gain;
            p = symmetrize(p);
            gains[t] = gain;
            values[t] = p.clone();
        }
        (gains, values)
    }

    #[test]
    fn scalar_lqr_backward_pass_matches_hand_riccati() {
        // x' = x + u, l = (x^2 + u^2)/2, phi = x^2/2, T = 1, zero nominal.
        let task = scalar_lqr(1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1);
        let traj = initial_rollout(&task).unwrap();
        let bp = backward_pass(&traj, &task, SolveMode::Vanilla).unwrap();
        assert_relative_eq!(bp.policy.feedback[0][(0, 0)], -0.5, epsilon = 1e-14);
        assert_relative_eq!(bp.policy.feedforward[0][0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(bp.value.vxx[(0, 0)], 1.5, epsilon = 1e-14);
        assert_eq!(bp.value.entropy, 0.0);
        assert_eq!(bp.policy.covariance[0], DMatrix::zeros(1, 1));
    }

    #[test]
    fn maxent_covariance_is_alpha_quu_inverse() {
        // Quu at t = 0 is r + b^2 P1 = 1 + 1 = 2.
        let task = scalar_lqr(1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1);
        let traj = initial_rollout(&task).unwrap();
        let bp = backward_pass(&traj, &task, SolveMode::MaxEnt { alpha: 0.1 }).unwrap();
        assert_relative_eq!(bp.policy.covariance[0][(0, 0)], 0.05, epsilon = 1e-14);
    }

    #[test]
    fn entropy_term_cancels_when_quu_is_two_pi() {
        // With alpha = 1 and Quu = 2 pi the per-step entropy increment is
        // (ln 2 pi - ln 2 pi) / 2 = 0. Choose r so Quu = r + b^2 P1 = 2 pi.
        let r = 2.0 * std::f64::consts::PI - 1.0;
        let task = scalar_lqr(1.0, 1.0, 1.0, r, 1.0, 0.0, 1);
        let traj = initial_rollout(&task).unwrap();
        let bp = backward_pass(&traj, &task, SolveMode::MaxEnt { alpha: 1.0 }).unwrap();
        assert!(bp.value.entropy.abs() < 1e-14, "V_H = {}", bp.value.entropy);
    }

    #[test]
    fn entropy_vanishes_as_alpha_goes_to_zero() {
        let task = scalar_lqr(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1);
        let traj = initial_rollout(&task).unwrap();
        let bp = backward_pass(&traj, &task, SolveMode::MaxEnt { alpha: 1e-9 }).unwrap();
        assert!(bp.value.entropy.abs() < 1e-6, "V_H = {}", bp.value.entropy);
    }

    #[test]
    fn tiny_alpha_gains_are_bitwise_vanilla() {
        let task = scalar_lqr(0.9, 0.7, 1.0, 0.5, 2.0, 1.3, 20);
        let traj = initial_rollout(&task).unwrap();
        let vanilla = backward_pass(&traj, &task, SolveMode::Vanilla).unwrap();
        let maxent = backward_pass(&traj, &task, SolveMode::MaxEnt { alpha: 1e-12 }).unwrap();
        for t in 0..20 {
            assert_eq!(vanilla.policy.feedforward[t], maxent.policy.feedforward[t]);
            assert_eq!(vanilla.policy.feedback[t], maxent.policy.feedback[t]);
        }
        assert_eq!(vanilla.value.vxx, maxent.value.vxx);
    }

    #[test]
    fn regularize_leaves_pd_matrix_unchanged() {
        let quu = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let reg = regularize_quu(&quu, 0.0).unwrap();
        assert_eq!(reg.matrix, quu);
        assert_eq!(reg.mu, 0.0);
    }

    #[test]
    fn regularize_shifts_indefinite_diagonal() {
        let quu = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0]));
        let reg = regularize_quu(&quu, 0.0).unwrap();
        assert!(reg.mu > 1.0, "mu = {}", reg.mu);
        assert!(Cholesky::new(reg.matrix.clone()).is_some());
    }

    #[test]
    fn regularized_random_indefinite_passes_eigenvalue_check() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let raw = DMatrix::from_fn(5, 5, |_, _| rng.random_range(-2.0..2.0));
            let sym = symmetrize(raw) - DMatrix::identity(5, 5) * 1.5;
            let reg = regularize_quu(&sym, 0.0).unwrap();
            let eigs = reg.matrix.clone().symmetric_eigenvalues();
            assert!(eigs.iter().all(|e| *e > 0.0), "eigs = {eigs}");
        }
    }

    #[test]
    fn regularize_fails_beyond_mu_cap() {
        // NaN entries can never pass a Cholesky factorization.
        let quu = DMatrix::from_element(2, 2, f64::NAN);
        assert!(matches!(
            regularize_quu(&quu, 0.0),
            Err(SolveError::RegularizationFailed { .. })
        ));
    }

    #[test]
    fn rollout_with_zero_eta_is_identity() {
        let task = scalar_lqr(0.95, 0.5, 1.0, 0.2, 3.0, 2.0, 15);
        let traj = initial_rollout(&task).unwrap();
        let bp = backward_pass(&traj, &task, SolveMode::Vanilla).unwrap();
        let replay = rollout(&task, &traj, &bp.policy, 0.0, None).unwrap();
        assert_eq!(replay.states, traj.states);
        assert_eq!(replay.controls, traj.controls);
        assert_eq!(replay.cost, traj.cost);
    }

    #[test]
    fn rollout_noise_passes_through_on_frozen_dynamics() {
        // x' = x ignores the control, so with zero gains the rolled controls
        // are exactly u_bar + eps.
        let dynamics = LinearSystem::new(DMatrix::identity(2, 2), DMatrix::zeros(2, 1));
        let cost = GoalCost::quadratic(
            DVector::zeros(2),
            DVector::zeros(2),
            DVector::from_vec(vec![0.0]),
            DVector::zeros(2),
        );
        let task = TaskDefinition::new(
            "frozen",
            Arc::new(dynamics),
            Arc::new(cost),
            3,
            DVector::from_vec(vec![1.0, -1.0]),
            SolverOptions::default(),
        )
        .unwrap();
        let traj = initial_rollout(&task).unwrap();
        let policy = LocalPolicy::zeros(2, 1, 3);
        let noise: Vec<DVector<f64>> = (0..3)
            .map(|t| DVector::from_vec(vec![t as f64 + 0.5]))
            .collect();
        let rolled = rollout(&task, &traj, &policy, 1.0, Some(&noise)).unwrap();
        for t in 0..3 {
            assert_eq!(rolled.controls[t], noise[t]);
        }
    }

    #[test]
    fn line_search_rejects_zero_feedforward() {
        let task = scalar_lqr(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 5);
        let traj = initial_rollout(&task).unwrap();
        let policy = LocalPolicy::zeros(1, 1, 5);
        let (out, accepted) = line_search(&task, &traj, &policy);
        assert!(!accepted);
        assert_eq!(out.cost, traj.cost);
    }

    #[test]
    fn line_search_rejects_ascent_directions() {
        let task = scalar_lqr(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 5);
        let traj = initial_rollout(&task).unwrap();
        let mut policy = LocalPolicy::zeros(1, 1, 5);
        for k in policy.feedforward.iter_mut() {
            k[0] = 50.0;
        }
        let (out, accepted) = line_search(&task, &traj, &policy);
        assert!(!accepted);
        assert_eq!(out.states, traj.states);
    }

    #[test]
    fn line_search_accepts_full_step_on_lqr() {
        let task = scalar_lqr(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 5);
        let traj = initial_rollout(&task).unwrap();
        let bp = backward_pass(&traj, &task, SolveMode::Vanilla).unwrap();
        let (out, accepted) = line_search(&task, &traj, &bp.policy);
        assert!(accepted);
        // The quadratic model is exact, so the full step hits the optimum.
        let full = rollout(&task, &traj, &bp.policy, 1.0, None).unwrap();
        assert_eq!(out.cost, full.cost);
    }

    #[test]
    fn vanilla_lqr_converges_in_one_iteration_to_riccati_cost() {
        let a = 0.9;
        let b = 0.6;
        let (q, r, qf, x0) = (1.0, 0.3, 2.0, 1.7);
        let horizon = 12;
        let mut task = scalar_lqr(a, b, q, r, qf, x0, horizon);
        task.solver.record_gains = true;
        let run = solve_vanilla(&task).unwrap();

        let (gains, values) = riccati(
            &DMatrix::from_element(1, 1, a),
            &DMatrix::from_element(1, 1, b),
            &DMatrix::from_element(1, 1, q),
            &DMatrix::from_element(1, 1, r),
            &DMatrix::from_element(1, 1, qf),
            horizon,
        );
        let optimal_cost = 0.5 * values[0][(0, 0)] * x0 * x0;
        assert_relative_eq!(run.trace[1], optimal_cost, epsilon = 1e-10);
        assert_relative_eq!(run.best.cost, optimal_cost, epsilon = 1e-10);

        // Gains computed from the optimal nominal match the Riccati gains.
        let recorded = run.gains.unwrap();
        let last = recorded.last().unwrap();
        for t in 0..horizon {
            assert_relative_eq!(
                last.feedback[t][(0, 0)],
                gains[t][(0, 0)],
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn random_lqr_value_matches_riccati_recursion() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..5 {
            let n_x = rng.random_range(2..=4);
            let n_u = rng.random_range(1..=2);
            let horizon = rng.random_range(3..=30);
            let a_raw: DMatrix<f64> = DMatrix::from_fn(n_x, n_x, |_, _| rng.random_range(-1.0..1.0));
            let scale: f64 = 0.95 / a_raw.norm().max(1e-6);
            let a = a_raw * scale.min(1.0);
            let b = DMatrix::from_fn(n_x, n_u, |_, _| rng.random_range(-1.0..1.0));
            let qd = DVector::from_fn(n_x, |_, _| rng.random_range(0.1..2.0));
            let rd = DVector::from_fn(n_u, |_, _| rng.random_range(0.1..2.0));
            let qfd = DVector::from_fn(n_x, |_, _| rng.random_range(0.1..3.0));
            let x0 = DVector::from_fn(n_x, |_, _| rng.random_range(-1.0..1.0));

            let cost = GoalCost::quadratic(
                DVector::zeros(n_x),
                qd.clone(),
                rd.clone(),
                qfd.clone(),
            );
            let task = TaskDefinition::new(
                "rand-lqr",
                Arc::new(LinearSystem::new(a.clone(), b.clone())),
                Arc::new(cost),
                horizon,
                x0,
                SolverOptions::default(),
            )
            .unwrap();

            let traj = initial_rollout(&task).unwrap();
            let bp = backward_pass(&traj, &task, SolveMode::Vanilla).unwrap();
            let (_, values) = riccati(
                &a,
                &b,
                &DMatrix::from_diagonal(&qd),
                &DMatrix::from_diagonal(&rd),
                &DMatrix::from_diagonal(&qfd),
                horizon,
            );
            let rel = (&bp.value.vxx - &values[0]).norm() / values[0].norm();
            assert!(rel < 1e-8, "relative Frobenius error {rel}");
        }
    }

    #[test]
    fn solve_is_deterministic_and_monotone() {
        let task = scalar_lqr(1.0, 0.8, 1.0, 0.4, 2.0, -1.1, 10);
        let run_a = solve_vanilla(&task).unwrap();
        let run_b = solve_vanilla(&task).unwrap();
        assert_eq!(run_a.trace, run_b.trace);
        for w in run_a.trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn starting_at_the_goal_keeps_zero_controls() {
        let dynamics = PointMassLike::default();
        let cost = GoalCost::quadratic(
            DVector::zeros(2),
            DVector::from_vec(vec![1.0, 1.0]),
            DVector::from_vec(vec![0.1]),
            DVector::from_vec(vec![5.0, 5.0]),
        );
        let task = TaskDefinition::new(
            "at-goal",
            Arc::new(dynamics.0),
            Arc::new(cost),
            8,
            DVector::zeros(2),
            SolverOptions::default(),
        )
        .unwrap();
        let run = solve_vanilla(&task).unwrap();
        assert_eq!(run.best.cost, 0.0);
        for u in &run.best.controls {
            assert_eq!(u, &DVector::zeros(1));
        }
    }

    struct PointMassLike(LinearSystem);

    impl Default for PointMassLike {
        fn default() -> Self {
            let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
            let b = DMatrix::from_row_slice(2, 1, &[0.005, 0.1]);
            PointMassLike(LinearSystem::new(a, b))
        }
    }

    #[test]
    fn cost_eval_matches_two_term_hand_sum() {
        // l = (x^2 + u^2)/2, phi = x^2/2, T = 1, x0 = 1, u = 0:
        // J = 0.5 + 0.5 = 1.
        let task = scalar_lqr(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1);
        let traj = initial_rollout(&task).unwrap();
        assert_relative_eq!(cost_eval(&task, &traj).unwrap(), 1.0);
        assert_relative_eq!(traj.cost, 1.0);
    }

    #[test]
    fn cost_eval_rejects_horizon_mismatch() {
        let task = scalar_lqr(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 4);
        let mut traj = initial_rollout(&task).unwrap();
        traj.controls.pop();
        traj.states.pop();
        assert!(matches!(
            cost_eval(&task, &traj),
            Err(SolveError::HorizonMismatch { .. })
        ));
    }

    #[test]
    fn cost_eval_is_additive_over_split_horizons() {
        let task = scalar_lqr(0.9, 0.5, 1.0, 0.3, 2.0, 1.0, 10);
        let traj = initial_rollout(&task).unwrap();
        let split = 4;
        let mut first_half = 0.0;
        for t in 0..split {
            first_half += task.cost.running(&traj.states[t], &traj.controls[t], t);
        }
        let tail = scalar_lqr(0.9, 0.5, 1.0, 0.3, 2.0, traj.states[split][0], task.horizon - split);
        let tail_traj = initial_rollout(&tail).unwrap();
        assert_relative_eq!(
            traj.cost,
            first_half + tail_traj.cost,
            epsilon = 1e-12
        );
    }
}
