//! Gait generation and gait control on top of the physics.
//!
//! A [`Simulator`] owns the robot state, the yaw and pitch oscillator banks
//! and the joint PID loops. Each control tick advances both oscillators once
//! and then runs the PID and the physics for a fixed number of substeps with
//! the joint targets held constant.

use std::sync::Arc;

use log::warn;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::contact::GroundParams;
use crate::control::{pid_step, PidGains, PidState};
use crate::cpg::{CpgConfig, CpgParams, Oscillator};
use crate::dynamics::{
    step_with, ConfigState, ExternalContact, JointFamily, OpenField, PhysicsOptions, RobotModel,
};
use crate::error::{invalid, Result};

/// Loop rates of the stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Timing {
    /// Physics and PID step, s.
    pub physics_dt: f64,
    /// Oscillator step and joint-target update period, s.
    pub control_dt: f64,
    /// Period between policy decisions, s.
    pub decision_dt: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            physics_dt: 1e-3,
            control_dt: 0.02,
            decision_dt: 2.0,
        }
    }
}

impl Timing {
    fn ratio(big: f64, small: f64, name: &str) -> Result<usize> {
        let r = big / small;
        let n = r.round();
        if !(n >= 1.0 && (r - n).abs() < 1e-9 * r.max(1.0)) {
            return Err(invalid(name, format!("{big} is not a whole multiple of {small}")));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.physics_dt > 0.0 && self.control_dt > 0.0 && self.decision_dt > 0.0) {
            return Err(invalid("timing", "all periods must be > 0"));
        }
        Self::ratio(self.control_dt, self.physics_dt, "timing.control_dt")?;
        Self::ratio(self.decision_dt, self.control_dt, "timing.decision_dt")?;
        Ok(())
    }

    /// Physics steps per control tick.
    pub fn substeps(&self) -> usize {
        Self::ratio(self.control_dt, self.physics_dt, "").unwrap_or(1)
    }

    /// Control ticks per policy decision.
    pub fn ticks_per_decision(&self) -> usize {
        Self::ratio(self.decision_dt, self.control_dt, "").unwrap_or(1)
    }
}

/// Oscillator settings shared by the two banks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaitConfig {
    pub a: f64,
    pub mu: f64,
    /// Multiplier on the commanded frequency. 1.0 uses the action range as
    /// the oscillator frequency in rad/s.
    pub omega_scale: f64,
    /// Initial phase of the pitch bank relative to the yaw bank, rad.
    pub pitch_phase: f64,
}

impl Default for GaitConfig {
    fn default() -> Self {
        Self {
            a: 10.0,
            mu: 5.0,
            omega_scale: 1.0,
            pitch_phase: std::f64::consts::FRAC_PI_2,
        }
    }
}

impl GaitConfig {
    pub fn cpg(&self, channels: usize) -> CpgConfig {
        CpgConfig {
            omega_scale: self.omega_scale,
            ..CpgConfig::uniform(channels, self.a, self.mu)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cpg(2).validate()?;
        if !self.pitch_phase.is_finite() {
            return Err(invalid("gait.pitch_phase", "must be finite"));
        }
        Ok(())
    }
}

/// Parameters for both oscillator banks.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GaitCommand {
    pub yaw: CpgParams,
    pub pitch: CpgParams,
}

/// Everything needed to build a [`Simulator`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub model: RobotModel,
    pub ground: GroundParams,
    pub pid: PidGains,
    pub gait: GaitConfig,
    pub timing: Timing,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            model: RobotModel::cobra(),
            ground: GroundParams::default(),
            pid: PidGains::default(),
            gait: GaitConfig::default(),
            timing: Timing::default(),
        }
    }
}

#[derive(Clone)]
pub struct Simulator {
    pub settings: SimSettings,
    pub state: ConfigState,
    pub command: GaitCommand,
    yaw_joints: Vec<usize>,
    pitch_joints: Vec<usize>,
    yaw: Oscillator,
    pitch: Oscillator,
    pid: PidState,
    targets: Vec<f64>,
    obstacles: Arc<dyn ExternalContact + Send + Sync>,
    head_accel: Vector3<f64>,
    start_time: f64,
    pub physics_steps: u64,
    pub control_ticks: u64,
}

impl std::fmt::Debug for Simulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulator")
            .field("time", &self.state.time)
            .field("physics_steps", &self.physics_steps)
            .field("control_ticks", &self.control_ticks)
            .finish_non_exhaustive()
    }
}

impl Simulator {
    pub fn new(settings: SimSettings, initial: ConfigState) -> Result<Self> {
        settings.model.check_state(&initial)?;
        settings.ground.validate()?;
        settings.pid.validate()?;
        settings.gait.validate()?;
        settings.timing.validate()?;
        let yaw_joints = settings.model.joints_of(JointFamily::Yaw);
        let pitch_joints = settings.model.joints_of(JointFamily::Pitch);
        if yaw_joints.len() < 2 || pitch_joints.len() < 2 {
            return Err(invalid("robot.n_joints", "need at least two joints per family"));
        }
        if settings.gait.omega_scale != 1.0 {
            warn!(
                "oscillator frequency scale {} in use: commanded omega is multiplied before integration",
                settings.gait.omega_scale
            );
        }
        let mut yaw = Oscillator::new(settings.gait.cpg(yaw_joints.len()))?;
        let mut pitch = Oscillator::new(settings.gait.cpg(pitch_joints.len()))?;
        yaw.reset(0.0, 0.0);
        pitch.reset(0.0, settings.gait.pitch_phase);
        let n = settings.model.n_joints;
        let targets = initial.joints(n).to_vec();
        Ok(Self {
            settings,
            start_time: initial.time,
            state: initial,
            command: GaitCommand::default(),
            yaw_joints,
            pitch_joints,
            yaw,
            pitch,
            pid: PidState::new(n),
            targets,
            obstacles: Arc::new(OpenField),
            head_accel: Vector3::zeros(),
            physics_steps: 0,
            control_ticks: 0,
        })
    }

    pub fn with_obstacles(mut self, obstacles: Arc<dyn ExternalContact + Send + Sync>) -> Self {
        self.obstacles = obstacles;
        self
    }

    pub fn model(&self) -> &RobotModel {
        &self.settings.model
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// World acceleration of the head over the last control tick.
    pub fn head_accel(&self) -> Vector3<f64> {
        self.head_accel
    }

    pub fn yaw_joints(&self) -> &[usize] {
        &self.yaw_joints
    }

    pub fn pitch_joints(&self) -> &[usize] {
        &self.pitch_joints
    }

    pub fn set_command(&mut self, command: GaitCommand) {
        self.command = command;
    }

    /// Overrides the joint targets directly, bypassing the oscillators until
    /// the next [`Simulator::control_tick`].
    pub fn set_targets(&mut self, targets: &[f64]) {
        self.targets.copy_from_slice(targets);
    }

    /// Advances the oscillators, then runs the held targets through the
    /// PID and the physics for one control period.
    pub fn control_tick(&mut self) -> Result<()> {
        let dt = self.settings.timing.control_dt;
        let yaw_x = self.yaw.step(&self.command.yaw, dt);
        let pitch_x = self.pitch.step(&self.command.pitch, dt);
        for (k, &j) in self.yaw_joints.iter().enumerate() {
            self.targets[j] = yaw_x[k];
        }
        for (k, &j) in self.pitch_joints.iter().enumerate() {
            self.targets[j] = pitch_x[k];
        }
        self.track_targets()
    }

    /// Runs PID and physics for one control period with the current targets.
    pub fn track_targets(&mut self) -> Result<()> {
        self.advance(None)
    }

    /// Runs the physics for one control period with joint torques held
    /// constant, bypassing oscillators and PID.
    pub fn apply_torques(&mut self, torque: &[f64]) -> Result<()> {
        let n = self.settings.model.n_joints;
        if torque.len() != n {
            return Err(crate::Error::Dimension {
                what: "joint torques",
                expected: n,
                actual: torque.len(),
            });
        }
        self.advance(Some(torque))
    }

    fn advance(&mut self, fixed_torque: Option<&[f64]>) -> Result<()> {
        let timing = self.settings.timing;
        let n = self.settings.model.n_joints;
        let p = self.settings.model.head_pos_index();
        let v0 = self.state.qdot.fixed_rows::<3>(p).into_owned();
        for _ in 0..timing.substeps() {
            let torque = match fixed_torque {
                Some(u) => u.to_vec(),
                None => {
                    let (pid, torque) = pid_step(
                        &self.settings.pid,
                        &self.pid,
                        &self.targets,
                        self.state.joints(n),
                        timing.physics_dt,
                    )?;
                    self.pid = pid;
                    torque
                }
            };
            let out = step_with(
                &self.settings.model,
                &self.state,
                &torque,
                &self.settings.ground,
                timing.physics_dt,
                self.obstacles.as_ref(),
                PhysicsOptions::default(),
            )?;
            self.state = out.state;
            self.physics_steps += 1;
        }
        // Clock derived from the step count, free of accumulated rounding.
        self.state.time = self.start_time + self.physics_steps as f64 * timing.physics_dt;
        let v1 = self.state.qdot.fixed_rows::<3>(p).into_owned();
        self.head_accel = (v1 - v0) / timing.control_dt;
        self.control_ticks += 1;
        Ok(())
    }

    /// Planar CoM of the whole chain.
    pub fn com(&self) -> Vector3<f64> {
        let frames = crate::dynamics::forward_kinematics(&self.settings.model, &self.state)
            .expect("state dimension checked at construction");
        frames.coms.iter().sum::<Vector3<f64>>() / frames.coms.len() as f64
    }
}
