//! Chain-coupled phase oscillators producing multi-channel sinusoids.
//!
//! ```text
//! φ̇ = ω + A φ + B θ
//! r̈ = a (a/4 (R - r) - ṙ)
//! x = r sin(φ) + δ
//! ```
//!
//! `A` is the open-chain Laplacian with per-row gains `μ_i`, `B` maps the
//! `k - 1` inter-channel phase shifts onto the channels. Amplitude, phase
//! shift and offset are scalars broadcast to every channel.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpgConfig {
    /// Amplitude convergence gain, 1/s.
    pub a: f64,
    /// Phase coupling gains, one per channel, 1/s.
    pub mu: Vec<f64>,
    /// Multiplier applied to the commanded frequency.
    #[serde(default = "one")]
    pub omega_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl CpgConfig {
    pub fn uniform(channels: usize, a: f64, mu: f64) -> Self {
        Self {
            a,
            mu: vec![mu; channels],
            omega_scale: 1.0,
        }
    }

    pub fn channels(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels() < 2 {
            return Err(invalid("cpg.channels", "need at least 2 channels"));
        }
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(invalid("cpg.a", "must be > 0"));
        }
        if self.mu.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(invalid("cpg.mu", "every coupling gain must be > 0"));
        }
        if !(self.omega_scale.is_finite() && self.omega_scale > 0.0) {
            return Err(invalid("cpg.omega_scale", "must be > 0"));
        }
        Ok(())
    }
}

/// Commanded gait parameters, broadcast across channels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CpgParams {
    /// Amplitude, rad.
    pub amplitude: f64,
    /// Frequency, rad/s.
    pub omega: f64,
    /// Phase shift between neighbouring channels, rad.
    pub theta: f64,
    /// Offset, rad.
    pub delta: f64,
}

impl CpgParams {
    pub const AMPLITUDE: (f64, f64) = (0.0, 1.5);
    pub const OMEGA: (f64, f64) = (-0.1, 0.1);
    pub const THETA: (f64, f64) = (-std::f64::consts::PI, std::f64::consts::PI);
    pub const DELTA: (f64, f64) = (-0.1, 0.1);

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("amplitude", self.amplitude, Self::AMPLITUDE),
            ("omega", self.omega, Self::OMEGA),
            ("theta", self.theta, Self::THETA),
            ("delta", self.delta, Self::DELTA),
        ];
        for (name, v, (lo, hi)) in checks {
            if !(lo..=hi).contains(&v) {
                return Err(invalid(format!("cpg.{name}"), format!("{v} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpgState {
    pub phi: DVector<f64>,
    pub r: DVector<f64>,
    pub rdot: DVector<f64>,
}

impl CpgState {
    pub fn channels(&self) -> usize {
        self.phi.len()
    }

    pub fn is_finite(&self) -> bool {
        self.phi.iter().chain(self.r.iter()).chain(self.rdot.iter()).all(|v| v.is_finite())
    }

    pub fn output(&self, delta: f64) -> DVector<f64> {
        self.r.zip_map(&self.phi, |r, p| r * p.sin() + delta)
    }
}

/// Coupling matrices `(A, B)`.
pub fn coupling_matrices(config: &CpgConfig) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    config.validate()?;
    let k = config.channels();
    let mu = &config.mu;
    let mut a = DMatrix::zeros(k, k);
    a[(0, 0)] = -mu[0];
    a[(0, 1)] = mu[0];
    for i in 1..k - 1 {
        a[(i, i - 1)] = mu[i];
        a[(i, i)] = -2.0 * mu[i];
        a[(i, i + 1)] = mu[i];
    }
    a[(k - 1, k - 2)] = mu[k - 1];
    a[(k - 1, k - 1)] = -mu[k - 1];
    let mut b = DMatrix::zeros(k, k - 1);
    for j in 0..k - 1 {
        b[(j, j)] = 1.0;
        b[(j + 1, j)] = -1.0;
    }
    Ok((a, b))
}

/// Oscillator state at rest with phases on the ladder `φ_i = -i θ0`.
pub fn reset(config: &CpgConfig, theta0: f64) -> CpgState {
    reset_with_phase(config, theta0, 0.0)
}

/// As [`reset`], with every phase advanced by `phase0`.
pub fn reset_with_phase(config: &CpgConfig, theta0: f64, phase0: f64) -> CpgState {
    let k = config.channels();
    CpgState {
        phi: DVector::from_fn(k, |i, _| phase0 - i as f64 * theta0),
        r: DVector::zeros(k),
        rdot: DVector::zeros(k),
    }
}

/// One explicit-Euler step; returns the new state and its output.
pub fn cpg_step(
    state: &CpgState,
    params: &CpgParams,
    config: &CpgConfig,
    dt: f64,
) -> (CpgState, DVector<f64>) {
    let mut osc = Oscillator::new(config.clone()).expect("valid CPG config");
    osc.state = state.clone();
    let x = osc.step(params, dt);
    (osc.state, x)
}

/// An oscillator bank with its coupling matrices precomputed.
#[derive(Debug, Clone)]
pub struct Oscillator {
    pub config: CpgConfig,
    pub state: CpgState,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl Oscillator {
    pub fn new(config: CpgConfig) -> Result<Self> {
        let (a, b) = coupling_matrices(&config)?;
        let state = reset(&config, 0.0);
        Ok(Self {
            config,
            state,
            a,
            b,
        })
    }

    pub fn reset(&mut self, theta0: f64, phase0: f64) {
        self.state = reset_with_phase(&self.config, theta0, phase0);
    }

    pub fn step(&mut self, params: &CpgParams, dt: f64) -> DVector<f64> {
        let k = self.config.channels();
        let s = &self.state;
        let theta = DVector::from_element(k - 1, params.theta);
        let omega = params.omega * self.config.omega_scale;
        let phi_dot = (&self.a * &s.phi + &self.b * theta).add_scalar(omega);
        let a = self.config.a;
        let r_ddot = s
            .r
            .zip_map(&s.rdot, |r, rd| a * (a / 4.0 * (params.amplitude - r) - rd));
        let next = CpgState {
            phi: &s.phi + phi_dot * dt,
            r: &s.r + &s.rdot * dt,
            rdot: &s.rdot + r_ddot * dt,
        };
        let x = next.output(params.delta);
        self.state = next;
        x
    }
}
