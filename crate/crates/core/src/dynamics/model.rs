use std::f64::consts::PI;

use nalgebra::{DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Axis family of a revolute joint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointFamily {
    /// Rotation about the parent body z axis.
    Yaw,
    /// Rotation about the parent body y axis.
    Pitch,
}

impl JointFamily {
    pub fn axis(self) -> Vector3<f64> {
        match self {
            JointFamily::Yaw => Vector3::z(),
            JointFamily::Pitch => Vector3::y(),
        }
    }
}

/// Tunable geometry of the modular chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobotParams {
    pub n_joints: usize,
    pub link_length: f64,
    pub link_mass: f64,
    pub link_width: f64,
    pub link_height: f64,
    /// Family of joint 1 (the one next to the head). Families alternate.
    pub first_joint: JointFamily,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            n_joints: 11,
            link_length: 0.12,
            link_mass: 0.5,
            link_width: 0.08,
            link_height: 0.08,
            first_joint: JointFamily::Yaw,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("robot.link_length", self.link_length),
            ("robot.link_mass", self.link_mass),
            ("robot.link_width", self.link_width),
            ("robot.link_height", self.link_height),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

/// Articulated chain of `n_joints + 1` identical box modules.
///
/// Body 0 is the head. Every body frame has its origin at the body CoM with
/// the long axis along local x, so with all joints at zero the chain trails
/// behind the head along the head's -x axis. Joint `j` (zero based) sits at
/// the rear face of body `j`, which is the front face of body `j + 1`, and
/// rotates about `joint_axes[j]` expressed in the frame of body `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub n_joints: usize,
    pub link_length: f64,
    pub link_mass: f64,
    pub link_height: f64,
    /// Body-frame inertia about the CoM, one per body.
    pub link_inertia: Vec<Matrix3<f64>>,
    pub joint_families: Vec<JointFamily>,
    pub joint_axes: Vec<Vector3<f64>>,
    /// Body-frame contact points, one list per body.
    pub contact_offsets: Vec<Vec<Vector3<f64>>>,
}

impl RobotModel {
    pub fn new(params: &RobotParams) -> Result<Self> {
        params.validate()?;
        let n = params.n_joints;
        let (l, w, h, m) = (
            params.link_length,
            params.link_width,
            params.link_height,
            params.link_mass,
        );
        let box_inertia = Matrix3::from_diagonal(&Vector3::new(
            m * (w * w + h * h) / 12.0,
            m * (l * l + h * h) / 12.0,
            m * (l * l + w * w) / 12.0,
        ));
        let families: Vec<JointFamily> = (0..n)
            .map(|j| match (params.first_joint, j % 2) {
                (f, 0) => f,
                (JointFamily::Yaw, _) => JointFamily::Pitch,
                (JointFamily::Pitch, _) => JointFamily::Yaw,
            })
            .collect();
        // All eight box corners. Off-axis points give the straight chain
        // roll stiffness and the top corners catch a module that rolls over.
        let mut contacts = Vec::with_capacity(8);
        for x in [l / 2.0, -l / 2.0] {
            for y in [w / 2.0, -w / 2.0] {
                for z in [-h / 2.0, h / 2.0] {
                    contacts.push(Vector3::new(x, y, z));
                }
            }
        }
        Ok(Self {
            n_joints: n,
            link_length: l,
            link_mass: m,
            link_height: h,
            link_inertia: vec![box_inertia; n + 1],
            joint_axes: families.iter().map(|f| f.axis()).collect(),
            joint_families: families,
            contact_offsets: vec![contacts; n + 1],
        })
    }

    pub fn cobra() -> Self {
        Self::new(&RobotParams::default()).expect("default parameters are valid")
    }

    /// Same default module geometry with a different joint count.
    pub fn with_joints(n_joints: usize) -> Self {
        Self::new(&RobotParams {
            n_joints,
            ..RobotParams::default()
        })
        .expect("default parameters are valid")
    }

    pub fn n_bodies(&self) -> usize {
        self.n_joints + 1
    }

    /// Number of generalized coordinates.
    pub fn dof(&self) -> usize {
        self.n_joints + 6
    }

    /// Index of the first head-position coordinate.
    pub fn head_pos_index(&self) -> usize {
        self.n_joints
    }

    /// Index of the first head Euler angle (x, y, z order).
    pub fn head_rot_index(&self) -> usize {
        self.n_joints + 3
    }

    pub fn total_mass(&self) -> f64 {
        self.link_mass * self.n_bodies() as f64
    }

    pub fn n_contacts(&self) -> usize {
        self.contact_offsets.iter().map(Vec::len).sum()
    }

    /// Body-frame position of the rear joint of a body.
    pub fn rear_joint(&self) -> Vector3<f64> {
        Vector3::new(-self.link_length / 2.0, 0.0, 0.0)
    }

    /// Body-frame position of the front joint of a body.
    pub fn front_joint(&self) -> Vector3<f64> {
        Vector3::new(self.link_length / 2.0, 0.0, 0.0)
    }

    pub fn joints_of(&self, family: JointFamily) -> Vec<usize> {
        (0..self.n_joints)
            .filter(|&j| self.joint_families[j] == family)
            .collect()
    }

    pub fn check_state(&self, state: &ConfigState) -> Result<()> {
        for (what, len) in [("q", state.q.len()), ("qdot", state.qdot.len())] {
            if len != self.dof() {
                return Err(Error::Dimension {
                    what,
                    expected: self.dof(),
                    actual: len,
                });
            }
        }
        Ok(())
    }
}

/// Generalized coordinates `q = [joints.., head position (3), head Euler
/// x/y/z]` and generalized velocities
/// `qdot = [joint rates.., head linear velocity (3), head angular velocity (3)]`,
/// both head velocities in world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigState {
    pub q: DVector<f64>,
    pub qdot: DVector<f64>,
    pub time: f64,
}

impl ConfigState {
    pub fn zeros(model: &RobotModel) -> Self {
        Self {
            q: DVector::zeros(model.dof()),
            qdot: DVector::zeros(model.dof()),
            time: 0.0,
        }
    }

    /// Straight chain lying on the ground with its head at `(x, y)` facing
    /// `yaw`.
    pub fn resting(model: &RobotModel, x: f64, y: f64, yaw: f64) -> Self {
        let mut s = Self::zeros(model);
        let p = model.head_pos_index();
        s.q[p] = x;
        s.q[p + 1] = y;
        s.q[p + 2] = model.link_height / 2.0;
        s.q[model.head_rot_index() + 2] = wrap_angle(yaw);
        s
    }

    pub fn joints(&self, n_joints: usize) -> &[f64] {
        &self.q.as_slice()[..n_joints]
    }

    pub fn head_position(&self, model: &RobotModel) -> Vector3<f64> {
        let p = model.head_pos_index();
        Vector3::new(self.q[p], self.q[p + 1], self.q[p + 2])
    }

    pub fn head_euler(&self, model: &RobotModel) -> Vector3<f64> {
        let r = model.head_rot_index();
        Vector3::new(self.q[r], self.q[r + 1], self.q[r + 2])
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qdot.iter()).all(|v| v.is_finite())
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w += 2.0 * PI;
    }
    w
}
