//! Simplified 7-DOF manipulator.
//!
//! Four links of fixed lengths chained by pitch-yaw joints; the last joint
//! has only a yaw angle. Angles `[q0..q6]` map to joints as
//! `(pitch_i, yaw_i) = (q[2i], q[2i+1])` for joints 0..2 and `yaw_3 = q[6]`,
//! with each joint applying yaw (about local z) before pitch (about local
//! y) and links extending along local +x.
//!
//! The dynamics are decoupled double-integrator joints with configurable
//! inertia: state `[q, q_dot]` in R^14, torque controls in R^7.

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix, Vector3};

use crate::cost::{symmetrize, Cost, Obstacle, RunningExpansion, TerminalExpansion};
use crate::dynamics::ContinuousDynamics;

pub const LINK_COUNT: usize = 4;
pub const JOINT_COUNT: usize = 7;

pub const DEFAULT_LINK_LENGTHS: [f64; LINK_COUNT] = [0.33, 0.32, 0.25, 0.15];

type Jacobian = SMatrix<f64, 3, 7>;
type JointHessian = SMatrix<f64, 7, 7>;

/// The arm's kinematic structure; all forward-kinematics queries live here.
#[derive(Debug, Clone, Copy)]
pub struct KinematicChain {
    pub link_lengths: [f64; LINK_COUNT],
}

impl Default for KinematicChain {
    fn default() -> Self {
        KinematicChain {
            link_lengths: DEFAULT_LINK_LENGTHS,
        }
    }
}

/// Position, Jacobian and per-coordinate Hessians of every link endpoint.
#[derive(Debug, Clone)]
pub struct ChainExpansion {
    pub points: [Vector3<f64>; LINK_COUNT],
    pub jacobians: [Jacobian; LINK_COUNT],
    /// `hessians[m][d][(i, j)] = d^2 points[m][d] / (dq_i dq_j)`.
    pub hessians: [[JointHessian; 3]; LINK_COUNT],
}

struct JointFrame {
    axis: Vector3<f64>,
    origin: Vector3<f64>,
    state_idx: usize,
}

impl KinematicChain {
    /// End-effector position for the given joint angles.
    pub fn forward_kinematics(&self, q: &[f64; JOINT_COUNT]) -> Vector3<f64> {
        self.link_points(q)[LINK_COUNT - 1]
    }

    /// Endpoint of every link, base to end effector.
    pub fn link_points(&self, q: &[f64; JOINT_COUNT]) -> [Vector3<f64>; LINK_COUNT] {
        let mut rot = Matrix3::identity();
        let mut pos = Vector3::zeros();
        let mut points = [Vector3::zeros(); LINK_COUNT];
        for i in 0..LINK_COUNT {
            rot *= yaw_rotation(q[yaw_index(i)]);
            if i < LINK_COUNT - 1 {
                rot *= pitch_rotation(q[2 * i]);
            }
            pos += rot * Vector3::new(self.link_lengths[i], 0.0, 0.0);
            points[i] = pos;
        }
        points
    }

    /// Full first- and second-order expansion of the chain. The geometric
    /// recursions are: for a revolute joint with world axis `a` at origin
    /// `o`, `dp/dq = a x (p - o)`, and for chain-ordered joints `j <= k`,
    /// `d^2p/(dq_j dq_k) = a_j x (a_k x (p - o_k))`.
    pub fn expand(&self, q: &[f64; JOINT_COUNT]) -> ChainExpansion {
        let mut rot = Matrix3::identity();
        let mut pos = Vector3::zeros();
        let mut frames: Vec<JointFrame> = Vec::with_capacity(JOINT_COUNT);

        let mut points = [Vector3::zeros(); LINK_COUNT];
        let mut jacobians = [Jacobian::zeros(); LINK_COUNT];
        let mut hessians = [[JointHessian::zeros(); 3]; LINK_COUNT];

        for i in 0..LINK_COUNT {
            frames.push(JointFrame {
                axis: rot * Vector3::z(),
                origin: pos,
                state_idx: yaw_index(i),
            });
            rot *= yaw_rotation(q[yaw_index(i)]);
            if i < LINK_COUNT - 1 {
                frames.push(JointFrame {
                    axis: rot * Vector3::y(),
                    origin: pos,
                    state_idx: 2 * i,
                });
                rot *= pitch_rotation(q[2 * i]);
            }
            pos += rot * Vector3::new(self.link_lengths[i], 0.0, 0.0);
            points[i] = pos;

            for (a, fa) in frames.iter().enumerate() {
                let col = fa.axis.cross(&(pos - fa.origin));
                jacobians[i].set_column(fa.state_idx, &col);
                for fb in &frames[a..] {
                    let h = fa.axis.cross(&fb.axis.cross(&(pos - fb.origin)));
                    for d in 0..3 {
                        hessians[i][d][(fa.state_idx, fb.state_idx)] = h[d];
                        hessians[i][d][(fb.state_idx, fa.state_idx)] = h[d];
                    }
                }
            }
        }

        ChainExpansion {
            points,
            jacobians,
            hessians,
        }
    }
}

fn yaw_index(link: usize) -> usize {
    if link < LINK_COUNT - 1 {
        2 * link + 1
    } else {
        6
    }
}

fn yaw_rotation(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn pitch_rotation(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// End-effector position for a 7-vector of joint angles.
pub fn forward_kinematics(q: &[f64; JOINT_COUNT]) -> Vector3<f64> {
    KinematicChain::default().forward_kinematics(q)
}

/// Torque-controlled arm with decoupled double-integrator joints.
pub struct ManipulatorArm {
    pub chain: KinematicChain,
    pub joint_inertias: [f64; JOINT_COUNT],
}

impl Default for ManipulatorArm {
    fn default() -> Self {
        ManipulatorArm {
            chain: KinematicChain::default(),
            joint_inertias: [1.0; JOINT_COUNT],
        }
    }
}

impl ContinuousDynamics for ManipulatorArm {
    fn state_dim(&self) -> usize {
        2 * JOINT_COUNT
    }

    fn control_dim(&self) -> usize {
        JOINT_COUNT
    }

    fn deriv(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let mut dx = DVector::zeros(2 * JOINT_COUNT);
        for j in 0..JOINT_COUNT {
            dx[j] = x[JOINT_COUNT + j];
            dx[JOINT_COUNT + j] = u[j] / self.joint_inertias[j];
        }
        dx
    }

    fn deriv_jacobians(
        &self,
        _x: &DVector<f64>,
        _u: &DVector<f64>,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = 2 * JOINT_COUNT;
        let mut gx = DMatrix::zeros(n, n);
        let mut gu = DMatrix::zeros(n, JOINT_COUNT);
        for j in 0..JOINT_COUNT {
            gx[(j, JOINT_COUNT + j)] = 1.0;
            gu[(JOINT_COUNT + j, j)] = 1.0 / self.joint_inertias[j];
        }
        (gx, gu)
    }
}

/// Reaching cost in end-effector space with soft obstacles on every link
/// endpoint.
///
/// Obstacle centers of length 2 act as vertical cylinders (xy distance),
/// length 3 as spheres.
pub struct ManipulatorCost {
    pub chain: KinematicChain,
    pub goal: Vector3<f64>,
    pub ee_weight: f64,
    pub ee_terminal_weight: f64,
    pub velocity_weight: f64,
    pub velocity_terminal_weight: f64,
    pub control_weights: DVector<f64>,
    pub obstacles: Vec<Obstacle>,
}

impl ManipulatorCost {
    fn angles(x: &DVector<f64>) -> [f64; JOINT_COUNT] {
        let mut q = [0.0; JOINT_COUNT];
        q.copy_from_slice(&x.as_slice()[..JOINT_COUNT]);
        q
    }

    fn obstacle_total(&self, points: &[Vector3<f64>; LINK_COUNT]) -> f64 {
        let mut total = 0.0;
        for obs in &self.obstacles {
            for p in points {
                total += obs.cost(p.as_slice());
            }
        }
        total
    }

    /// Adds `w/2 |p - target|^2` for the end effector, expanded in joint
    /// space through the chain Jacobian and Hessian.
    fn add_ee_term(
        &self,
        exp: &ChainExpansion,
        weight: f64,
        grad_q: &mut DVector<f64>,
        hess_q: &mut DMatrix<f64>,
    ) -> f64 {
        let m = LINK_COUNT - 1;
        let err = exp.points[m] - self.goal;
        let jac = &exp.jacobians[m];
        let g = jac.transpose() * err * weight;
        let mut h = jac.transpose() * jac * weight;
        for d in 0..3 {
            h += exp.hessians[m][d] * (weight * err[d]);
        }
        for i in 0..JOINT_COUNT {
            grad_q[i] += g[i];
            for j in 0..JOINT_COUNT {
                hess_q[(i, j)] += h[(i, j)];
            }
        }
        0.5 * weight * err.norm_squared()
    }

    /// Adds every obstacle bump over every link endpoint, chained into
    /// joint space.
    fn add_obstacle_terms(
        &self,
        exp: &ChainExpansion,
        grad_q: &mut DVector<f64>,
        hess_q: &mut DMatrix<f64>,
    ) -> f64 {
        let mut total = 0.0;
        for obs in &self.obstacles {
            let k = obs.center.len();
            for m in 0..LINK_COUNT {
                let p = &exp.points[m];
                let (value, grad_p, hess_p) = obs.cost_expansion(p.as_slice());
                total += value;
                let jac = &exp.jacobians[m];
                for i in 0..JOINT_COUNT {
                    for a in 0..k {
                        grad_q[i] += jac[(a, i)] * grad_p[a];
                    }
                    for j in 0..JOINT_COUNT {
                        let mut h = 0.0;
                        for a in 0..k {
                            for b in 0..k {
                                h += jac[(a, i)] * hess_p[(a, b)] * jac[(b, j)];
                            }
                            h += grad_p[a] * exp.hessians[m][a][(i, j)];
                        }
                        hess_q[(i, j)] += h;
                    }
                }
            }
        }
        total
    }
}

impl Cost for ManipulatorCost {
    fn running(&self, x: &DVector<f64>, u: &DVector<f64>, _t: usize) -> f64 {
        let q = Self::angles(x);
        let points = self.chain.link_points(&q);
        let ee_err = points[LINK_COUNT - 1] - self.goal;
        let vel_sq: f64 = (0..JOINT_COUNT).map(|j| x[JOINT_COUNT + j].powi(2)).sum();
        0.5 * self.ee_weight * ee_err.norm_squared()
            + 0.5 * self.velocity_weight * vel_sq
            + 0.5 * u.component_mul(&self.control_weights).dot(u)
            + self.obstacle_total(&points)
    }

    fn terminal(&self, x: &DVector<f64>) -> f64 {
        let q = Self::angles(x);
        let ee_err = self.chain.forward_kinematics(&q) - self.goal;
        let vel_sq: f64 = (0..JOINT_COUNT).map(|j| x[JOINT_COUNT + j].powi(2)).sum();
        0.5 * self.ee_terminal_weight * ee_err.norm_squared()
            + 0.5 * self.velocity_terminal_weight * vel_sq
    }

    fn quadratize(&self, x: &DVector<f64>, u: &DVector<f64>, _t: usize) -> RunningExpansion {
        let n_x = 2 * JOINT_COUNT;
        let q = Self::angles(x);
        let exp = self.chain.expand(&q);

        let mut grad_q = DVector::zeros(JOINT_COUNT);
        let mut hess_q = DMatrix::zeros(JOINT_COUNT, JOINT_COUNT);
        let mut l = self.add_ee_term(&exp, self.ee_weight, &mut grad_q, &mut hess_q);
        l += self.add_obstacle_terms(&exp, &mut grad_q, &mut hess_q);

        let mut lx = DVector::zeros(n_x);
        let mut lxx = DMatrix::zeros(n_x, n_x);
        for i in 0..JOINT_COUNT {
            lx[i] = grad_q[i];
            lx[JOINT_COUNT + i] = self.velocity_weight * x[JOINT_COUNT + i];
            l += 0.5 * self.velocity_weight * x[JOINT_COUNT + i].powi(2);
            lxx[(JOINT_COUNT + i, JOINT_COUNT + i)] = self.velocity_weight;
            for j in 0..JOINT_COUNT {
                lxx[(i, j)] = hess_q[(i, j)];
            }
        }

        let lu = u.component_mul(&self.control_weights);
        l += 0.5 * lu.dot(u);

        RunningExpansion {
            l,
            lx,
            lu,
            lxx: symmetrize(lxx),
            lux: DMatrix::zeros(JOINT_COUNT, n_x),
            luu: DMatrix::from_diagonal(&self.control_weights),
        }
    }

    fn quadratize_terminal(&self, x: &DVector<f64>) -> TerminalExpansion {
        let n_x = 2 * JOINT_COUNT;
        let q = Self::angles(x);
        let exp = self.chain.expand(&q);

        let mut grad_q = DVector::zeros(JOINT_COUNT);
        let mut hess_q = DMatrix::zeros(JOINT_COUNT, JOINT_COUNT);
        let mut phi = self.add_ee_term(&exp, self.ee_terminal_weight, &mut grad_q, &mut hess_q);

        let mut phi_x = DVector::zeros(n_x);
        let mut phi_xx = DMatrix::zeros(n_x, n_x);
        for i in 0..JOINT_COUNT {
            phi_x[i] = grad_q[i];
            phi_x[JOINT_COUNT + i] = self.velocity_terminal_weight * x[JOINT_COUNT + i];
            phi += 0.5 * self.velocity_terminal_weight * x[JOINT_COUNT + i].powi(2);
            phi_xx[(JOINT_COUNT + i, JOINT_COUNT + i)] = self.velocity_terminal_weight;
            for j in 0..JOINT_COUNT {
                phi_xx[(i, j)] = hess_q[(i, j)];
            }
        }

        TerminalExpansion {
            phi,
            phi_x,
            phi_xx: symmetrize(phi_xx),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Isometry3, Translation3, UnitQuaternion};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_configuration_extends_along_x() {
        let ee = forward_kinematics(&[0.0; 7]);
        let total: f64 = DEFAULT_LINK_LENGTHS.iter().sum();
        assert_relative_eq!(ee, Vector3::new(total, 0.0, 0.0), epsilon = 1e-14);
    }

    #[test]
    fn first_yaw_of_pi_mirrors_the_chain() {
        let mut q = [0.0; 7];
        q[1] = std::f64::consts::PI;
        let ee = forward_kinematics(&q);
        let total: f64 = DEFAULT_LINK_LENGTHS.iter().sum();
        assert_relative_eq!(ee.x, -total, epsilon = 1e-12);
        assert!(ee.y.abs() < 1e-12 && ee.z.abs() < 1e-12);
    }

    /// Independent oracle: compose homogeneous transforms with nalgebra
    /// isometries instead of the incremental rotation accumulation.
    fn fk_transform_oracle(chain: &KinematicChain, q: &[f64; 7]) -> Vector3<f64> {
        let mut iso = Isometry3::identity();
        for i in 0..LINK_COUNT {
            let yaw = if i < 3 { q[2 * i + 1] } else { q[6] };
            iso *= Isometry3::from_parts(
                Translation3::identity(),
                UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
            );
            if i < 3 {
                iso *= Isometry3::from_parts(
                    Translation3::identity(),
                    UnitQuaternion::from_axis_angle(&Vector3::y_axis(), q[2 * i]),
                );
            }
            iso *= Isometry3::from_parts(
                Translation3::new(chain.link_lengths[i], 0.0, 0.0),
                UnitQuaternion::identity(),
            );
        }
        iso.translation.vector
    }

    #[test]
    fn fk_matches_transform_chain_oracle() {
        let chain = KinematicChain::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut q = [0.0; 7];
            for a in q.iter_mut() {
                *a = rng.random_range(-3.0..3.0);
            }
            let got = chain.forward_kinematics(&q);
            let expected = fk_transform_oracle(&chain, &q);
            assert_relative_eq!(got, expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn chain_jacobian_and_hessian_match_finite_differences() {
        let chain = KinematicChain::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for _ in 0..10 {
            let mut q = [0.0; 7];
            for a in q.iter_mut() {
                *a = rng.random_range(-2.0..2.0);
            }
            let exp = chain.expand(&q);
            for m in 0..LINK_COUNT {
                for i in 0..JOINT_COUNT {
                    let mut qp = q;
                    let mut qm = q;
                    qp[i] += h;
                    qm[i] -= h;
                    let pp = chain.link_points(&qp)[m];
                    let pm = chain.link_points(&qm)[m];
                    let fd = (pp - pm) / (2.0 * h);
                    for d in 0..3 {
                        assert_relative_eq!(
                            exp.jacobians[m][(d, i)],
                            fd[d],
                            epsilon = 1e-8,
                            max_relative = 1e-6
                        );
                    }
                    let jp = chain.expand(&qp).jacobians[m];
                    let jm = chain.expand(&qm).jacobians[m];
                    for j in 0..JOINT_COUNT {
                        for d in 0..3 {
                            let h_fd = (jp[(d, j)] - jm[(d, j)]) / (2.0 * h);
                            assert_relative_eq!(
                                exp.hessians[m][d][(j, i)],
                                h_fd,
                                epsilon = 1e-6,
                                max_relative = 1e-4
                            );
                        }
                    }
                }
            }
        }
    }
}
