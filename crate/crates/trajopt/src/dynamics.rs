//! Discrete-time dynamics models and the RK4 discretization wrapper.

use nalgebra::{DMatrix, DVector};

/// A deterministic discrete-time dynamics model `x' = f(x, u)`.
///
/// `step` must be a pure function: identical inputs yield bit-identical
/// outputs. `linearize` returns the Jacobians of `step`, `f_x` of shape
/// `n_x x n_x` and `f_u` of shape `n_x x n_u`.
pub trait Dynamics: Send + Sync {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    /// Step period in seconds.
    fn dt(&self) -> f64;

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;

    /// Jacobians `(f_x, f_u)` of [`Dynamics::step`] at `(x, u)`.
    fn linearize(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>);
}

/// A continuous-time vector field `x_dot = g(x, u)` with analytic Jacobians,
/// discretized by [`Rk4`].
pub trait ContinuousDynamics: Send + Sync {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;

    fn deriv(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;

    /// Jacobians `(g_x, g_u)` of the vector field at `(x, u)`.
    fn deriv_jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>);
}

/// Classic fourth-order Runge-Kutta discretization of a continuous-time
/// system, with exact Jacobians obtained by differentiating through the
/// four stages.
pub struct Rk4<S> {
    pub system: S,
    pub dt: f64,
}

impl<S> Rk4<S> {
    pub fn new(system: S, dt: f64) -> Self {
        assert!(dt > 0.0, "step period must be positive");
        Rk4 { system, dt }
    }
}

impl<S: ContinuousDynamics> Dynamics for Rk4<S> {
    fn state_dim(&self) -> usize {
        self.system.state_dim()
    }

    fn control_dim(&self) -> usize {
        self.system.control_dim()
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        check_dims(self, x, u);
        let h = self.dt;
        let k1 = self.system.deriv(x, u);
        let k2 = self.system.deriv(&(x + &k1 * (h / 2.0)), u);
        let k3 = self.system.deriv(&(x + &k2 * (h / 2.0)), u);
        let k4 = self.system.deriv(&(x + &k3 * h), u);
        x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    }

    fn linearize(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        check_dims(self, x, u);
        let h = self.dt;
        let n = self.state_dim();
        let eye = DMatrix::<f64>::identity(n, n);

        let k1 = self.system.deriv(x, u);
        let x2 = x + &k1 * (h / 2.0);
        let k2 = self.system.deriv(&x2, u);
        let x3 = x + &k2 * (h / 2.0);
        let k3 = self.system.deriv(&x3, u);
        let x4 = x + &k3 * h;

        let (g1x, g1u) = self.system.deriv_jacobians(x, u);
        let (g2x, g2u) = self.system.deriv_jacobians(&x2, u);
        let (g3x, g3u) = self.system.deriv_jacobians(&x3, u);
        let (g4x, g4u) = self.system.deriv_jacobians(&x4, u);

        // Stage sensitivities: dk_i/dx and dk_i/du by the chain rule.
        let dk1x = g1x;
        let dk2x = &g2x * (&eye + &dk1x * (h / 2.0));
        let dk3x = &g3x * (&eye + &dk2x * (h / 2.0));
        let dk4x = &g4x * (&eye + &dk3x * h);

        let dk1u = g1u;
        let dk2u = &g2x * &dk1u * (h / 2.0) + &g2u;
        let dk3u = &g3x * &dk2u * (h / 2.0) + &g3u;
        let dk4u = &g4x * &dk3u * h + &g4u;

        let fx = &eye + (dk1x + dk2x * 2.0 + dk3x * 2.0 + dk4x) * (h / 6.0);
        let fu = (dk1u + dk2u * 2.0 + dk3u * 2.0 + dk4u) * (h / 6.0);
        (fx, fu)
    }
}

pub(crate) fn check_dims(model: &(impl Dynamics + ?Sized), x: &DVector<f64>, u: &DVector<f64>) {
    assert_eq!(
        x.len(),
        model.state_dim(),
        "state dimension mismatch: got {}, model expects {}",
        x.len(),
        model.state_dim()
    );
    assert_eq!(
        u.len(),
        model.control_dim(),
        "control dimension mismatch: got {}, model expects {}",
        u.len(),
        model.control_dim()
    );
}
