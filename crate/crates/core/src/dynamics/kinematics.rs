//! Forward kinematics, velocity Jacobians and velocity-product accelerations
//! of the floating chain.

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, Vector3};

use super::model::{ConfigState, RobotModel};
use crate::error::Result;

/// Head orientation from Euler angles `(q_x, q_y, q_z)`: `Rz * Ry * Rx`.
pub fn euler_rotation(angles: &Vector3<f64>) -> Matrix3<f64> {
    let rz = Rotation3::from_axis_angle(&Vector3::z_axis(), angles.z);
    let ry = Rotation3::from_axis_angle(&Vector3::y_axis(), angles.y);
    let rx = Rotation3::from_axis_angle(&Vector3::x_axis(), angles.x);
    (rz * ry * rx).into_inner()
}

/// Euler angles `(q_x, q_y, q_z)` of a rotation; inverse of
/// [`euler_rotation`] with `q_y` in `[-pi/2, pi/2]`. At `q_y = ±pi/2` the
/// roll is set to zero.
pub fn euler_from_rotation(r: &Matrix3<f64>) -> Vector3<f64> {
    let cy = r[(0, 0)].hypot(r[(1, 0)]);
    let y = (-r[(2, 0)]).atan2(cy);
    if r[(2, 1)].hypot(r[(2, 2)]) > 1e-12 {
        Vector3::new(r[(2, 1)].atan2(r[(2, 2)]), y, r[(1, 0)].atan2(r[(0, 0)]))
    } else {
        Vector3::new(0.0, y, (-r[(0, 1)]).atan2(r[(1, 1)]))
    }
}

/// Configuration reached from `q` after moving with generalized velocity
/// `nu` for time `h`. Joints and head position move linearly; the head
/// rotates by `exp(h ω)` in the world frame.
pub fn integrate_configuration(model: &RobotModel, q: &DVector<f64>, nu: &DVector<f64>, h: f64) -> DVector<f64> {
    let r = model.head_rot_index();
    let mut out = q + nu * h;
    let euler = Vector3::new(q[r], q[r + 1], q[r + 2]);
    let omega = Vector3::new(nu[r], nu[r + 1], nu[r + 2]);
    let rot = Rotation3::new(omega * h).into_inner() * euler_rotation(&euler);
    out.fixed_rows_mut::<3>(r).copy_from(&euler_from_rotation(&rot));
    out
}

/// World-frame angular-velocity directions generated by unit rates of each
/// Euler angle, in `(x, y, z)` order.
pub fn euler_rate_axes(angles: &Vector3<f64>) -> [Vector3<f64>; 3] {
    let (sy, cy) = angles.y.sin_cos();
    let (sz, cz) = angles.z.sin_cos();
    [
        Vector3::new(cy * cz, cy * sz, -sy),
        Vector3::new(-sz, cz, 0.0),
        Vector3::z(),
    ]
}

/// World pose of every module.
#[derive(Debug, Clone)]
pub struct FrameSet {
    pub rotations: Vec<Matrix3<f64>>,
    pub origins: Vec<Vector3<f64>>,
    pub coms: Vec<Vector3<f64>>,
}

pub fn forward_kinematics(model: &RobotModel, state: &ConfigState) -> Result<FrameSet> {
    model.check_state(state)?;
    let k = Kinematics::positions(model, &state.q);
    Ok(FrameSet {
        rotations: k.rotations,
        origins: k.origins,
        coms: k.coms,
    })
}

/// Linear (CoM) and angular velocity maps of one body.
#[derive(Debug, Clone)]
pub struct BodyJacobian {
    pub linear: DMatrix<f64>,
    pub angular: DMatrix<f64>,
}

pub fn body_jacobians(model: &RobotModel, state: &ConfigState) -> Result<Vec<BodyJacobian>> {
    model.check_state(state)?;
    let k = Kinematics::positions(model, &state.q);
    Ok((0..model.n_bodies())
        .map(|b| BodyJacobian {
            linear: k.point_jacobian(b, &k.coms[b]),
            angular: k.angular_jacobian(b),
        })
        .collect())
}

/// Cached kinematic quantities of one configuration, optionally with the
/// velocity-level terms needed by the dynamics.
#[derive(Debug, Clone)]
pub(crate) struct Kinematics {
    pub n_joints: usize,
    pub rotations: Vec<Matrix3<f64>>,
    /// Body origins, which coincide with the CoMs.
    pub origins: Vec<Vector3<f64>>,
    pub coms: Vec<Vector3<f64>>,
    /// World axis of each joint.
    pub joint_axes: Vec<Vector3<f64>>,
    pub joint_positions: Vec<Vector3<f64>>,
    pub omegas: Vec<Vector3<f64>>,
    pub origin_vels: Vec<Vector3<f64>>,
    /// Angular acceleration of each body at zero generalized acceleration.
    pub alpha_bias: Vec<Vector3<f64>>,
    /// Origin acceleration of each body at zero generalized acceleration.
    pub accel_bias: Vec<Vector3<f64>>,
}

impl Kinematics {
    pub fn positions(model: &RobotModel, q: &DVector<f64>) -> Self {
        let n = model.n_joints;
        let nb = model.n_bodies();
        let p = model.head_pos_index();
        let r = model.head_rot_index();
        let euler = Vector3::new(q[r], q[r + 1], q[r + 2]);
        let mut rotations = Vec::with_capacity(nb);
        let mut origins = Vec::with_capacity(nb);
        let mut joint_axes = Vec::with_capacity(n);
        let mut joint_positions = Vec::with_capacity(n);
        rotations.push(euler_rotation(&euler));
        origins.push(Vector3::new(q[p], q[p + 1], q[p + 2]));
        let (rear, front) = (model.rear_joint(), model.front_joint());
        for j in 0..n {
            let parent_rot = rotations[j];
            let rel = Rotation3::from_axis_angle(
                &nalgebra::Unit::new_unchecked(model.joint_axes[j]),
                q[j],
            );
            let child_rot = parent_rot * rel.matrix();
            let joint = origins[j] + parent_rot * rear;
            joint_axes.push(parent_rot * model.joint_axes[j]);
            joint_positions.push(joint);
            origins.push(joint - child_rot * front);
            rotations.push(child_rot);
        }
        let coms = origins.clone();
        Self {
            n_joints: n,
            rotations,
            origins,
            coms,
            joint_axes,
            joint_positions,
            omegas: Vec::new(),
            origin_vels: Vec::new(),
            alpha_bias: Vec::new(),
            accel_bias: Vec::new(),
        }
    }

    pub fn with_velocities(model: &RobotModel, state: &ConfigState) -> Self {
        let mut k = Self::positions(model, &state.q);
        let n = model.n_joints;
        let qd = &state.qdot;
        let p = model.head_pos_index();
        let r = model.head_rot_index();

        let mut omegas = Vec::with_capacity(n + 1);
        let mut alphas = Vec::with_capacity(n + 1);
        let mut vels = Vec::with_capacity(n + 1);
        let mut accs = Vec::with_capacity(n + 1);
        omegas.push(Vector3::new(qd[r], qd[r + 1], qd[r + 2]));
        alphas.push(Vector3::zeros());
        vels.push(Vector3::new(qd[p], qd[p + 1], qd[p + 2]));
        accs.push(Vector3::zeros());
        for j in 0..n {
            let a = k.joint_axes[j];
            let joint = k.joint_positions[j];
            let (w, alpha) = (omegas[j], alphas[j]);
            let r_parent = joint - k.origins[j];
            let v_joint = vels[j] + w.cross(&r_parent);
            let a_joint = accs[j] + alpha.cross(&r_parent) + w.cross(&w.cross(&r_parent));
            let w_child = w + a * qd[j];
            let alpha_child = alpha + w.cross(&a) * qd[j];
            let r_child = k.origins[j + 1] - joint;
            vels.push(v_joint + w_child.cross(&r_child));
            accs.push(
                a_joint + alpha_child.cross(&r_child) + w_child.cross(&w_child.cross(&r_child)),
            );
            omegas.push(w_child);
            alphas.push(alpha_child);
        }
        k.omegas = omegas;
        k.alpha_bias = alphas;
        k.origin_vels = vels;
        k.accel_bias = accs;
        k
    }

    pub fn dof(&self) -> usize {
        self.n_joints + 6
    }

    /// Jacobian of the world position of a point fixed to body `b`.
    pub fn point_jacobian(&self, b: usize, point: &Vector3<f64>) -> DMatrix<f64> {
        let n = self.n_joints;
        let mut jac = DMatrix::zeros(3, self.dof());
        for j in 0..b {
            let col = self.joint_axes[j].cross(&(point - self.joint_positions[j]));
            jac.fixed_view_mut::<3, 1>(0, j).copy_from(&col);
        }
        for i in 0..3 {
            jac[(i, n + i)] = 1.0;
        }
        let rel = point - self.origins[0];
        jac.fixed_view_mut::<3, 3>(0, n + 3).copy_from(&-rel.cross_matrix());
        jac
    }

    pub fn angular_jacobian(&self, b: usize) -> DMatrix<f64> {
        let n = self.n_joints;
        let mut jac = DMatrix::zeros(3, self.dof());
        for j in 0..b {
            jac.fixed_view_mut::<3, 1>(0, j).copy_from(&self.joint_axes[j]);
        }
        jac.fixed_view_mut::<3, 3>(0, n + 3).copy_from(&Matrix3::identity());
        jac
    }

    /// Adds `J_pointᵀ f` for a force `f` applied at `point` on body `b`.
    pub fn add_point_force(&self, out: &mut DVector<f64>, b: usize, point: &Vector3<f64>, f: &Vector3<f64>) {
        let n = self.n_joints;
        for j in 0..b {
            out[j] += self.joint_axes[j].dot(&(point - self.joint_positions[j]).cross(f));
        }
        for i in 0..3 {
            out[n + i] += f[i];
        }
        let moment = (point - self.origins[0]).cross(f);
        for i in 0..3 {
            out[n + 3 + i] += moment[i];
        }
    }

    /// Adds `βᵀ τ` for a pure torque `tau` applied to body `b`.
    pub fn add_body_torque(&self, out: &mut DVector<f64>, b: usize, tau: &Vector3<f64>) {
        let n = self.n_joints;
        for j in 0..b {
            out[j] += self.joint_axes[j].dot(tau);
        }
        for i in 0..3 {
            out[n + 3 + i] += tau[i];
        }
    }

    /// World velocity of a point fixed to body `b` (requires velocities).
    pub fn point_velocity(&self, b: usize, point: &Vector3<f64>) -> Vector3<f64> {
        self.origin_vels[b] + self.omegas[b].cross(&(point - self.origins[b]))
    }

    /// Velocity-product acceleration of a point on body `b`.
    pub fn point_accel_bias(&self, b: usize, point: &Vector3<f64>) -> Vector3<f64> {
        let rel = point - self.origins[b];
        let w = self.omegas[b];
        self.accel_bias[b] + self.alpha_bias[b].cross(&rel) + w.cross(&w.cross(&rel))
    }
}
