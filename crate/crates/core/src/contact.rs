//! Compliant ground contact with Stribeck friction.
//!
//! The ground is the plane `z = 0`. Below it a contact point feels a
//! spring-damper normal force and, per horizontal axis, a friction force that
//! blends from static to Coulomb friction over the Stribeck velocity plus a
//! viscous term. The sign function in the friction law is smoothed with
//! `tanh(v / sgn_eps)`; outside a thin boundary layer this is the plain sign.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroundParams {
    /// Normal stiffness, N/m.
    pub k1: f64,
    /// Normal damping, N·s/m.
    pub k2: f64,
    pub mu_c: f64,
    pub mu_s: f64,
    /// Viscous friction, N·s/m.
    pub mu_v: f64,
    /// Stribeck velocity, m/s.
    pub v_s: f64,
    /// Width of the sign-function boundary layer, m/s.
    pub sgn_eps: f64,
}

impl Default for GroundParams {
    fn default() -> Self {
        Self {
            k1: 2.0e4,
            k2: 150.0,
            mu_c: 0.4,
            mu_s: 0.6,
            mu_v: 0.1,
            v_s: 0.05,
            sgn_eps: 1.0e-3,
        }
    }
}

impl GroundParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.k1, self.k2, self.mu_c, self.mu_s, self.mu_v, self.v_s, self.sgn_eps,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(invalid("ground", "all parameters must be finite"));
        }
        if self.k1 <= 0.0 {
            return Err(invalid("ground.k1", "must be > 0"));
        }
        if self.k2 < 0.0 {
            return Err(invalid("ground.k2", "must be >= 0"));
        }
        if self.mu_c < 0.0 || self.mu_s < self.mu_c {
            return Err(invalid("ground.mu_s", "require mu_s >= mu_c >= 0"));
        }
        if self.mu_v < 0.0 {
            return Err(invalid("ground.mu_v", "must be >= 0"));
        }
        if self.v_s <= 0.0 {
            return Err(invalid("ground.v_s", "must be > 0"));
        }
        if self.sgn_eps <= 0.0 {
            return Err(invalid("ground.sgn_eps", "must be > 0"));
        }
        Ok(())
    }

    /// Stribeck friction coefficient at tangential speed `v`.
    pub fn stribeck(&self, v: f64) -> f64 {
        // Convex blend: exact at both ends.
        let e = (-(v * v) / (self.v_s * self.v_s)).exp();
        e * self.mu_s + (1.0 - e) * self.mu_c
    }

    fn smooth_sign(&self, v: f64) -> f64 {
        (v / self.sgn_eps).tanh()
    }
}

/// World position and velocity of a contact point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactQuery {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

/// Ground reaction force acting on the contact point, N.
pub fn ground_reaction(params: &GroundParams, query: &ContactQuery) -> Vector3<f64> {
    let p = &query.position;
    let v = &query.velocity;
    if p.z > 0.0 {
        return Vector3::zeros();
    }
    // The ground can push but never pull.
    let fz = (-params.k1 * p.z - params.k2 * v.z).max(0.0);
    let tangential = |vi: f64| -> f64 {
        -params.stribeck(vi.abs()) * fz * params.smooth_sign(vi) - params.mu_v * vi
    };
    Vector3::new(tangential(v.x), tangential(v.y), fz)
}

/// Ground reaction together with `-∂F/∂v`, the velocity stiffness of the
/// damping terms. The friction coefficient and the normal force are treated
/// as constant in the derivative.
pub fn ground_reaction_with_damping(
    params: &GroundParams,
    query: &ContactQuery,
) -> (Vector3<f64>, Matrix3<f64>) {
    let force = ground_reaction(params, query);
    if force == Vector3::zeros() {
        return (force, Matrix3::zeros());
    }
    let v = &query.velocity;
    let fz = force.z;
    let slope = |vi: f64| -> f64 {
        let sech = 1.0 / (vi / params.sgn_eps).cosh();
        params.stribeck(vi.abs()) * fz * sech * sech / params.sgn_eps + params.mu_v
    };
    let kz = if fz > 0.0 { params.k2 } else { 0.0 };
    (force, Matrix3::from_diagonal(&Vector3::new(slope(v.x), slope(v.y), kz)))
}

/// Normal force magnitude of a frictionless penalty barrier.
///
/// `depth` is the penetration (positive inside the obstacle) and
/// `normal_speed` the velocity component along the outward normal.
pub fn penalty_normal(params: &GroundParams, depth: f64, normal_speed: f64) -> f64 {
    if depth <= 0.0 {
        return 0.0;
    }
    (params.k1 * depth - params.k2 * normal_speed).max(0.0)
}
