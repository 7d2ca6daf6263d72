//! Generic discrete-time linear system `x' = A x + B u`, used for LQR-style
//! synthetic tasks in tests and validation.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{check_dims, Dynamics};

pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub dt: f64,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "A must be square");
        assert_eq!(a.nrows(), b.nrows(), "A and B row counts must match");
        LinearSystem { a, b, dt: 1.0 }
    }

    /// Scalar system `x' = a x + b u`.
    pub fn scalar(a: f64, b: f64) -> Self {
        LinearSystem::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
        )
    }
}

impl Dynamics for LinearSystem {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        check_dims(self, x, u);
        &self.a * x + &self.b * u
    }

    fn linearize(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        check_dims(self, x, u);
        (self.a.clone(), self.b.clone())
    }
}
