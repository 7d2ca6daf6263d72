//! 2D point mass: a double integrator with state `[px, py, vx, vy]` and
//! acceleration controls `[ax, ay]`, discretized exactly.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{check_dims, Dynamics};

pub struct PointMass {
    pub dt: f64,
}

impl PointMass {
    pub fn new(dt: f64) -> Self {
        assert!(dt > 0.0);
        PointMass { dt }
    }
}

impl Dynamics for PointMass {
    fn state_dim(&self) -> usize {
        4
    }

    fn control_dim(&self) -> usize {
        2
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        check_dims(self, x, u);
        let dt = self.dt;
        DVector::from_vec(vec![
            x[0] + dt * x[2] + 0.5 * dt * dt * u[0],
            x[1] + dt * x[3] + 0.5 * dt * dt * u[1],
            x[2] + dt * u[0],
            x[3] + dt * u[1],
        ])
    }

    fn linearize(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        check_dims(self, x, u);
        let dt = self.dt;
        let mut fx = DMatrix::identity(4, 4);
        fx[(0, 2)] = dt;
        fx[(1, 3)] = dt;
        let mut fu = DMatrix::zeros(4, 2);
        fu[(0, 0)] = 0.5 * dt * dt;
        fu[(1, 1)] = 0.5 * dt * dt;
        fu[(2, 0)] = dt;
        fu[(3, 1)] = dt;
        (fx, fu)
    }
}
