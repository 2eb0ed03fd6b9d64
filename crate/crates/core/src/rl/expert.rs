//! Scripted gait selection computed from observations alone.
//!
//! The body axis runs from the tail link's centre of mass to the head link's.
//! A sidewinding gait moves the body sideways towards the waypoint while the
//! yaw offset steers it along the axis; when the waypoint lies mostly along
//! the axis an axial gait is used instead.

use nalgebra::{Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use super::spaces::{Action, Observation};
use crate::dynamics::{forward_kinematics, ConfigState, RobotModel};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpertConfig {
    /// Yaw offset per metre of along-axis error, rad/m.
    pub gain: f64,
    pub yaw_amplitude: f64,
    pub pitch_amplitude: f64,
    /// Lateral distance below which amplitudes are halved, m.
    pub slow_band: f64,
    /// The axial gait is used when the along-axis error exceeds
    /// `axial_ratio * lateral + axial_margin`.
    pub axial_ratio: f64,
    pub axial_margin: f64,
}

impl Default for ExpertConfig {
    fn default() -> Self {
        Self {
            gain: 0.3,
            yaw_amplitude: 0.5,
            pitch_amplitude: 0.2,
            slow_band: 0.7,
            axial_ratio: 1.0,
            axial_margin: 0.3,
        }
    }
}

impl ExpertConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.gain,
            self.yaw_amplitude,
            self.pitch_amplitude,
            self.slow_band,
            self.axial_ratio,
            self.axial_margin,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite || self.slow_band < 0.0 || self.axial_ratio < 0.0 {
            return Err(invalid("expert", "parameters must be finite and bands >= 0"));
        }
        Ok(())
    }
}

/// Action chosen by the scripted controller for an observation.
pub fn expert_action(model: &RobotModel, obs: &Observation, cfg: &ExpertConfig) -> Result<Action> {
    let n = model.n_joints;
    if obs.joint_positions.len() != n {
        return Err(crate::Error::Dimension {
            what: "observation joints",
            expected: n,
            actual: obs.joint_positions.len(),
        });
    }
    let mut body = ConfigState::zeros(model);
    body.q.rows_mut(0, n).copy_from_slice(&obs.joint_positions);
    let frames = forward_kinematics(model, &body)?;
    let [ax, ay, az, angle] = obs.relative_rotation;
    let rel = Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::new(ax, ay, az)), angle);
    // World vertical in the head frame; waypoint frames have no tilt.
    let up = rel * Vector3::z();
    let flat = |v: Vector3<f64>| v - up * up.dot(&v);
    let coms = &frames.coms;
    let centre = coms.iter().sum::<Vector3<f64>>() / coms.len() as f64;
    let axis = flat(coms[0] - coms[coms.len() - 1]);
    let axis = if axis.norm() > 1e-9 { axis.normalize() } else { Vector3::x() };
    let left = up.cross(&axis);
    let disp = Vector3::from(obs.displacement);
    let lateral = (disp - centre).dot(&left);
    let along = flat(disp).dot(&axis);
    let upright = if up.z >= 0.0 { 1.0 } else { -1.0 };

    if along.abs() > cfg.axial_ratio * lateral.abs() + cfg.axial_margin {
        return Ok(Action {
            r1: 1.0,
            r2: 0.3,
            omega: if along > 0.0 { -0.1 } else { 0.1 },
            theta1: 2.5,
            theta2: 2.0,
            delta1: 0.0,
            delta2: 0.0,
        });
    }
    let scale = if lateral.abs() < cfg.slow_band { 0.5 } else { 1.0 };
    Ok(Action::from_slice(&[
        cfg.yaw_amplitude * scale,
        cfg.pitch_amplitude * scale,
        if lateral < 0.0 { 0.1 } else { -0.1 },
        3.14,
        3.14,
        -cfg.gain * along * upright,
        0.0,
    ]))
}
