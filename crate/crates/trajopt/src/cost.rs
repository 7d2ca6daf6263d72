//! Cost models: quadratic goal attraction, control effort, and soft
//! Gaussian obstacle penalties, with analytic first and second derivatives.

use nalgebra::{DMatrix, DVector};

/// Value, gradient and Hessian blocks of the running cost at one stage.
///
/// `lxx` and `luu` are symmetric by construction.
#[derive(Debug, Clone)]
pub struct RunningExpansion {
    pub l: f64,
    pub lx: DVector<f64>,
    pub lu: DVector<f64>,
    pub lxx: DMatrix<f64>,
    pub lux: DMatrix<f64>,
    pub luu: DMatrix<f64>,
}

/// Value, gradient and Hessian of the terminal cost.
#[derive(Debug, Clone)]
pub struct TerminalExpansion {
    pub phi: f64,
    pub phi_x: DVector<f64>,
    pub phi_xx: DMatrix<f64>,
}

/// Running plus terminal cost with analytic quadratization.
pub trait Cost: Send + Sync {
    fn running(&self, x: &DVector<f64>, u: &DVector<f64>, t: usize) -> f64;
    fn terminal(&self, x: &DVector<f64>) -> f64;

    /// Second-order expansion of the running cost at `(x, u)`.
    fn quadratize(&self, x: &DVector<f64>, u: &DVector<f64>, t: usize) -> RunningExpansion;

    /// Second-order expansion of the terminal cost at `x`.
    fn quadratize_terminal(&self, x: &DVector<f64>) -> TerminalExpansion;
}

/// A soft obstacle: a Gaussian bump `weight * exp(-d^2 / (2 r^2))` where `d`
/// is the Euclidean distance from a task point to `center`.
///
/// The distance uses the first `center.len()` coordinates of the point, so a
/// 2D center against a 3D point acts as an infinite cylinder about the
/// remaining axis.
#[derive(Debug, Clone)]
pub struct Obstacle {
    pub center: DVector<f64>,
    pub radius: f64,
    pub weight: f64,
}

impl Obstacle {
    pub fn new(center: DVector<f64>, radius: f64, weight: f64) -> Self {
        assert!(radius > 0.0, "obstacle radius must be positive");
        Obstacle {
            center,
            radius,
            weight,
        }
    }

    /// Bump value at a point; total over all finite inputs, bounded in
    /// `(0, weight]` and monotonically decreasing in the distance.
    pub fn cost(&self, point: &[f64]) -> f64 {
        let d2 = self.dist_sq(point);
        self.weight * (-d2 / (2.0 * self.radius * self.radius)).exp()
    }

    /// Value, gradient and Hessian of the bump with respect to the leading
    /// `center.len()` coordinates of the point.
    pub fn cost_expansion(&self, point: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let k = self.center.len();
        let r2 = self.radius * self.radius;
        let diff = DVector::from_fn(k, |i, _| point[i] - self.center[i]);
        let value = self.weight * (-diff.norm_squared() / (2.0 * r2)).exp();
        // grad = -v/r^2 (p - c);  hess = v/r^2 ((p-c)(p-c)^T / r^2 - I)
        let grad = &diff * (-value / r2);
        let mut hess = &diff * diff.transpose() * (value / (r2 * r2));
        for i in 0..k {
            hess[(i, i)] -= value / r2;
        }
        (value, grad, hess)
    }

    fn dist_sq(&self, point: &[f64]) -> f64 {
        self.center
            .iter()
            .zip(point)
            .map(|(c, p)| (p - c) * (p - c))
            .sum()
    }
}

/// Evaluates one obstacle bump at a task point. See [`Obstacle::cost`].
pub fn obstacle_cost(point: &[f64], obstacle: &Obstacle) -> f64 {
    obstacle.cost(point)
}

/// Quadratic state/control cost toward a goal state, plus soft obstacles on
/// the leading position coordinates.
///
/// Running cost:
/// `0.5 (x-goal)' diag(state_weights) (x-goal)
///  + 0.5 (u-u_ref)' diag(control_weights) (u-u_ref)
///  + sum_i obstacle_i(x[..k_i])`,
/// terminal cost `0.5 (x-goal)' diag(terminal_weights) (x-goal)`.
#[derive(Debug, Clone)]
pub struct GoalCost {
    pub goal: DVector<f64>,
    pub state_weights: DVector<f64>,
    pub control_weights: DVector<f64>,
    pub terminal_weights: DVector<f64>,
    pub control_reference: DVector<f64>,
    pub obstacles: Vec<Obstacle>,
    /// Number of leading state coordinates that are positions; every
    /// obstacle center must fit within them.
    pub position_dims: usize,
}

impl GoalCost {
    /// Pure quadratic cost with no obstacles and a zero control reference.
    pub fn quadratic(
        goal: DVector<f64>,
        state_weights: DVector<f64>,
        control_weights: DVector<f64>,
        terminal_weights: DVector<f64>,
    ) -> Self {
        let n_u = control_weights.len();
        let n_x = goal.len();
        GoalCost {
            goal,
            state_weights,
            control_weights,
            terminal_weights,
            control_reference: DVector::zeros(n_u),
            obstacles: Vec::new(),
            position_dims: n_x,
        }
    }
}

impl Cost for GoalCost {
    fn running(&self, x: &DVector<f64>, u: &DVector<f64>, _t: usize) -> f64 {
        let dx = x - &self.goal;
        let du = u - &self.control_reference;
        let mut l = 0.5 * dx.component_mul(&self.state_weights).dot(&dx)
            + 0.5 * du.component_mul(&self.control_weights).dot(&du);
        for obs in &self.obstacles {
            l += obs.cost(x.as_slice());
        }
        l
    }

    fn terminal(&self, x: &DVector<f64>) -> f64 {
        let dx = x - &self.goal;
        0.5 * dx.component_mul(&self.terminal_weights).dot(&dx)
    }

    fn quadratize(&self, x: &DVector<f64>, u: &DVector<f64>, t: usize) -> RunningExpansion {
        let n_x = x.len();
        let n_u = u.len();
        let dx = x - &self.goal;
        let du = u - &self.control_reference;

        let l = self.running(x, u, t);
        let mut lx = dx.component_mul(&self.state_weights);
        let lu = du.component_mul(&self.control_weights);
        let mut lxx = DMatrix::from_diagonal(&self.state_weights);
        let luu = DMatrix::from_diagonal(&self.control_weights);
        let lux = DMatrix::zeros(n_u, n_x);

        for obs in &self.obstacles {
            let k = obs.center.len();
            let (_, grad, hess) = obs.cost_expansion(x.as_slice());
            for i in 0..k {
                lx[i] += grad[i];
                for j in 0..k {
                    lxx[(i, j)] += hess[(i, j)];
                }
            }
        }

        RunningExpansion {
            l,
            lx,
            lu,
            lxx: symmetrize(lxx),
            lux,
            luu,
        }
    }

    fn quadratize_terminal(&self, x: &DVector<f64>) -> TerminalExpansion {
        let dx = x - &self.goal;
        TerminalExpansion {
            phi: self.terminal(x),
            phi_x: dx.component_mul(&self.terminal_weights),
            phi_xx: DMatrix::from_diagonal(&self.terminal_weights),
        }
    }
}

/// `(H + H^T) / 2`; keeps asymmetric round-off out of the value recursion.
pub fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let mt = m.transpose();
    (m + mt) * 0.5
}
