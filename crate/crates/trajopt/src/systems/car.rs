//! 2D car: Dubins vehicle under jerk control.
//!
//! State `[px, py, theta, v, a]`, controls `[omega, j]` (turn rate and
//! jerk). The vector field is
//!
//! ```text
//! px_dot = v cos(theta)    theta_dot = omega
//! py_dot = v sin(theta)    v_dot     = a
//!                          a_dot     = j
//! ```

use nalgebra::{DMatrix, DVector};

use crate::dynamics::ContinuousDynamics;

pub struct Car;

impl ContinuousDynamics for Car {
    fn state_dim(&self) -> usize {
        5
    }

    fn control_dim(&self) -> usize {
        2
    }

    fn deriv(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let (theta, v, a) = (x[2], x[3], x[4]);
        DVector::from_vec(vec![v * theta.cos(), v * theta.sin(), u[0], a, u[1]])
    }

    fn deriv_jacobians(&self, x: &DVector<f64>, _u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let (theta, v) = (x[2], x[3]);
        let (s, c) = theta.sin_cos();
        let mut gx = DMatrix::zeros(5, 5);
        gx[(0, 2)] = -v * s;
        gx[(0, 3)] = c;
        gx[(1, 2)] = v * c;
        gx[(1, 3)] = s;
        gx[(3, 4)] = 1.0;
        let mut gu = DMatrix::zeros(5, 2);
        gu[(2, 0)] = 1.0;
        gu[(4, 1)] = 1.0;
        (gx, gu)
    }
}
