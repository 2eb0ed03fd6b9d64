//! Per-joint PID tracking with torque saturation and integral clamping.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Torque saturation, N·m.
    pub u_max: f64,
    /// Integral clamp, rad·s.
    pub i_max: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 25.0,
            ki: 0.5,
            kd: 1.2,
            u_max: 8.0,
            i_max: 1.0,
        }
    }
}

impl PidGains {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd), ("i_max", self.i_max)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("pid.{name}"), "must be finite and >= 0"));
            }
        }
        if !(self.u_max.is_finite() && self.u_max > 0.0) {
            return Err(invalid("pid.u_max", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PidState {
    pub integral: Vec<f64>,
    /// `None` until the first step so the derivative starts at zero.
    pub prev_error: Option<Vec<f64>>,
}

impl PidState {
    pub fn new(n: usize) -> Self {
        Self {
            integral: vec![0.0; n],
            prev_error: None,
        }
    }
}

/// One PID update. Returns the new state and the saturated torques.
pub fn pid_step(
    gains: &PidGains,
    state: &PidState,
    target: &[f64],
    actual: &[f64],
    dt: f64,
) -> Result<(PidState, Vec<f64>)> {
    let n = state.integral.len();
    for (what, len) in [("target", target.len()), ("actual", actual.len())] {
        if len != n {
            return Err(Error::Dimension {
                what,
                expected: n,
                actual: len,
            });
        }
    }
    if !(dt > 0.0) {
        return Err(invalid("dt", "must be > 0"));
    }
    let error: Vec<f64> = target.iter().zip(actual).map(|(t, a)| t - a).collect();
    let mut integral = Vec::with_capacity(n);
    let mut torque = Vec::with_capacity(n);
    for i in 0..n {
        let e = error[i];
        let acc = (state.integral[i] + e * dt).clamp(-gains.i_max, gains.i_max);
        let de = match &state.prev_error {
            Some(prev) => (e - prev[i]) / dt,
            None => 0.0,
        };
        let u = gains.kp * e + gains.ki * acc + gains.kd * de;
        integral.push(acc);
        torque.push(u.clamp(-gains.u_max, gains.u_max));
    }
    Ok((
        PidState {
            integral,
            prev_error: Some(error),
        },
        torque,
    ))
}
