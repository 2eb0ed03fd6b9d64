use std::f64::consts::PI;

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::cpg::CpgParams;
use crate::dynamics::{euler_rotation, ConfigState, RobotModel, GRAVITY};
use crate::sim::GaitCommand;

pub const ACTION_DIM: usize = 7;

/// Gait parameters chosen by the policy. Oscillator bank 1 drives the yaw
/// joints and bank 2 the pitch joints; both share one frequency.
///
/// Vector layout: `[r1, r2, omega, theta1, theta2, delta1, delta2]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub r1: f64,
    pub r2: f64,
    pub omega: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub delta1: f64,
    pub delta2: f64,
}

impl Action {
    pub const LOW: [f64; ACTION_DIM] = [0.0, 0.0, -0.1, -PI, -PI, -0.1, -0.1];
    pub const HIGH: [f64; ACTION_DIM] = [1.5, 1.5, 0.1, PI, PI, 0.1, 0.1];

    pub fn to_array(&self) -> [f64; ACTION_DIM] {
        [
            self.r1,
            self.r2,
            self.omega,
            self.theta1,
            self.theta2,
            self.delta1,
            self.delta2,
        ]
    }

    /// Builds an action from a vector, clipping each entry into its range.
    pub fn from_slice(v: &[f64]) -> Self {
        assert_eq!(v.len(), ACTION_DIM, "action vector length");
        let c: Vec<f64> = (0..ACTION_DIM)
            .map(|i| v[i].clamp(Self::LOW[i], Self::HIGH[i]))
            .collect();
        Self {
            r1: c[0],
            r2: c[1],
            omega: c[2],
            theta1: c[3],
            theta2: c[4],
            delta1: c[5],
            delta2: c[6],
        }
    }

    /// Affine map from `[-1, 1]^7` onto the ranges.
    pub fn from_unit(u: &[f64]) -> Self {
        let v: Vec<f64> = (0..ACTION_DIM)
            .map(|i| {
                let (lo, hi) = (Self::LOW[i], Self::HIGH[i]);
                lo + (u[i].clamp(-1.0, 1.0) + 1.0) * 0.5 * (hi - lo)
            })
            .collect();
        Self::from_slice(&v)
    }

    pub fn to_unit(&self) -> [f64; ACTION_DIM] {
        let a = self.to_array();
        std::array::from_fn(|i| {
            let (lo, hi) = (Self::LOW[i], Self::HIGH[i]);
            2.0 * (a[i] - lo) / (hi - lo) - 1.0
        })
    }

    pub fn midpoint() -> Self {
        Self::from_unit(&[0.0; ACTION_DIM])
    }

    pub fn range_widths() -> [f64; ACTION_DIM] {
        std::array::from_fn(|i| Self::HIGH[i] - Self::LOW[i])
    }

    pub fn is_within_ranges(&self) -> bool {
        self.to_array()
            .iter()
            .enumerate()
            .all(|(i, v)| (Self::LOW[i]..=Self::HIGH[i]).contains(v))
    }

    pub fn gait_command(&self) -> GaitCommand {
        GaitCommand {
            yaw: CpgParams {
                amplitude: self.r1,
                omega: self.omega,
                theta: self.theta1,
                delta: self.delta1,
            },
            pitch: CpgParams {
                amplitude: self.r2,
                omega: self.omega,
                theta: self.theta2,
                delta: self.delta2,
            },
        }
    }

    pub fn distance(&self, other: &Action) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Ego-centric observation. For the default robot this is 21-dimensional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Joint angles, rad.
    pub joint_positions: Vec<f64>,
    /// Specific force at the head in the head frame, m/s².
    pub imu_accel: [f64; 3],
    /// Waypoint position in the head frame, m.
    pub displacement: [f64; 3],
    /// Unit axis and angle of the waypoint frame relative to the head frame.
    pub relative_rotation: [f64; 4],
}

impl Observation {
    pub fn dim_for(n_joints: usize) -> usize {
        n_joints + 10
    }

    pub fn dim(&self) -> usize {
        Self::dim_for(self.joint_positions.len())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.joint_positions);
        v.extend_from_slice(&self.imu_accel);
        v.extend_from_slice(&self.displacement);
        v.extend_from_slice(&self.relative_rotation);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|v| v.is_finite())
    }
}

/// A target pose on the plane: position and heading about world z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaypointPose {
    pub position: [f64; 3],
    pub yaw: f64,
}

impl WaypointPose {
    pub fn rotation(&self) -> Matrix3<f64> {
        Rotation3::from_axis_angle(&Vector3::z_axis(), self.yaw).into_inner()
    }
}

/// Planar distance between the head and a waypoint, m.
pub fn planar_distance(model: &RobotModel, state: &ConfigState, waypoint: &WaypointPose) -> f64 {
    let h = state.head_position(model);
    (waypoint.position[0] - h.x).hypot(waypoint.position[1] - h.y)
}

/// Axis-angle of a rotation matrix; a zero angle reports axis `(1, 0, 0)`.
pub fn axis_angle(r: &Matrix3<f64>) -> [f64; 4] {
    let rot = Rotation3::from_matrix(r);
    match rot.axis_angle() {
        Some((axis, angle)) => [axis.x, axis.y, axis.z, angle],
        None => [1.0, 0.0, 0.0, 0.0],
    }
}

/// Observation of a waypoint from the current state. `head_accel` is the
/// world-frame head acceleration, typically a finite difference of the head
/// velocity.
pub fn build_observation(
    state: &ConfigState,
    model: &RobotModel,
    head_accel: &Vector3<f64>,
    waypoint: &WaypointPose,
) -> Observation {
    let r_head = euler_rotation(&state.head_euler(model));
    let r_t = r_head.transpose();
    let gravity = Vector3::new(0.0, 0.0, -GRAVITY);
    let imu = r_t * (head_accel - gravity);
    let disp = r_t * (Vector3::from(waypoint.position) - state.head_position(model));
    Observation {
        joint_positions: state.joints(model.n_joints).to_vec(),
        imu_accel: imu.into(),
        displacement: disp.into(),
        relative_rotation: axis_angle(&(r_t * waypoint.rotation())),
    }
}
