//! 12-state quadcopter with Euler angles and body-frame angular rates.
//!
//! State `[px, py, pz, psi, theta, phi, vx, vy, vz, p, q, r]` (position,
//! yaw/pitch/roll, world-frame velocity, body rates), controls
//! `[f_t, tau_x, tau_y, tau_z]` (total thrust and body torques). Thrust acts
//! along the body z axis; gravity along world -z.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::ContinuousDynamics;

pub const GRAVITY: f64 = 9.81;

pub struct Quadcopter {
    pub mass: f64,
    /// Diagonal body inertia `[Ix, Iy, Iz]`.
    pub inertia: [f64; 3],
}

impl Default for Quadcopter {
    fn default() -> Self {
        Quadcopter {
            mass: 1.0,
            inertia: [0.01, 0.01, 0.02],
        }
    }
}

impl Quadcopter {
    /// Thrust that balances gravity at level attitude.
    pub fn hover_thrust(&self) -> f64 {
        self.mass * GRAVITY
    }
}

impl ContinuousDynamics for Quadcopter {
    fn state_dim(&self) -> usize {
        12
    }

    fn control_dim(&self) -> usize {
        4
    }

    fn deriv(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let (psi, theta, phi) = (x[3], x[4], x[5]);
        let (vx, vy, vz) = (x[6], x[7], x[8]);
        let (p, q, r) = (x[9], x[10], x[11]);
        let ft = u[0];
        let m = self.mass;
        let [ix, iy, iz] = self.inertia;

        let (s_psi, c_psi) = psi.sin_cos();
        let (s_th, c_th) = theta.sin_cos();
        let (s_ph, c_ph) = phi.sin_cos();
        let t_th = s_th / c_th;

        DVector::from_vec(vec![
            vx,
            vy,
            vz,
            (q * s_ph + r * c_ph) / c_th,
            q * c_ph - r * s_ph,
            p + (q * s_ph + r * c_ph) * t_th,
            ft / m * (c_psi * s_th * c_ph + s_psi * s_ph),
            ft / m * (s_psi * s_th * c_ph - c_psi * s_ph),
            ft / m * (c_th * c_ph) - GRAVITY,
            (iy - iz) / ix * q * r + u[1] / ix,
            (iz - ix) / iy * p * r + u[2] / iy,
            (ix - iy) / iz * p * q + u[3] / iz,
        ])
    }

    fn deriv_jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let (psi, theta, phi) = (x[3], x[4], x[5]);
        let (p, q, r) = (x[9], x[10], x[11]);
        let ft = u[0];
        let m = self.mass;
        let [ix, iy, iz] = self.inertia;

        let (s_psi, c_psi) = psi.sin_cos();
        let (s_th, c_th) = theta.sin_cos();
        let (s_ph, c_ph) = phi.sin_cos();
        let t_th = s_th / c_th;
        let sec2_th = 1.0 / (c_th * c_th);
        // Recurring combination q sin(phi) + r cos(phi) from the Euler rates.
        let qr_mix = q * s_ph + r * c_ph;
        let qr_mix_d = q * c_ph - r * s_ph;

        let mut gx = DMatrix::zeros(12, 12);
        gx[(0, 6)] = 1.0;
        gx[(1, 7)] = 1.0;
        gx[(2, 8)] = 1.0;

        gx[(3, 4)] = qr_mix * s_th * sec2_th;
        gx[(3, 5)] = qr_mix_d / c_th;
        gx[(3, 10)] = s_ph / c_th;
        gx[(3, 11)] = c_ph / c_th;

        gx[(4, 5)] = -qr_mix;
        gx[(4, 10)] = c_ph;
        gx[(4, 11)] = -s_ph;

        gx[(5, 4)] = qr_mix * sec2_th;
        gx[(5, 5)] = qr_mix_d * t_th;
        gx[(5, 9)] = 1.0;
        gx[(5, 10)] = s_ph * t_th;
        gx[(5, 11)] = c_ph * t_th;

        let a = ft / m;
        gx[(6, 3)] = a * (-s_psi * s_th * c_ph + c_psi * s_ph);
        gx[(6, 4)] = a * c_psi * c_th * c_ph;
        gx[(6, 5)] = a * (-c_psi * s_th * s_ph + s_psi * c_ph);

        gx[(7, 3)] = a * (c_psi * s_th * c_ph + s_psi * s_ph);
        gx[(7, 4)] = a * s_psi * c_th * c_ph;
        gx[(7, 5)] = a * (-s_psi * s_th * s_ph - c_psi * c_ph);

        gx[(8, 4)] = -a * s_th * c_ph;
        gx[(8, 5)] = -a * c_th * s_ph;

        gx[(9, 10)] = (iy - iz) / ix * r;
        gx[(9, 11)] = (iy - iz) / ix * q;
        gx[(10, 9)] = (iz - ix) / iy * r;
        gx[(10, 11)] = (iz - ix) / iy * p;
        gx[(11, 9)] = (ix - iy) / iz * q;
        gx[(11, 10)] = (ix - iy) / iz * p;

        let mut gu = DMatrix::zeros(12, 4);
        gu[(6, 0)] = (c_psi * s_th * c_ph + s_psi * s_ph) / m;
        gu[(7, 0)] = (s_psi * s_th * c_ph - c_psi * s_ph) / m;
        gu[(8, 0)] = c_th * c_ph / m;
        gu[(9, 1)] = 1.0 / ix;
        gu[(10, 2)] = 1.0 / iy;
        gu[(11, 3)] = 1.0 / iz;

        (gx, gu)
    }
}
