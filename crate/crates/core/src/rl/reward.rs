use serde::{Deserialize, Serialize};

use super::spaces::Action;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardWeights {
    /// Proximity term weight.
    pub w1: f64,
    /// Progress term weight.
    pub w2: f64,
    /// Action-change penalty weight.
    pub w3: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: 1.0,
            w3: 0.05,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        if [self.w1, self.w2, self.w3].iter().any(|w| !w.is_finite()) {
            return Err(invalid("reward", "weights must be finite"));
        }
        Ok(())
    }
}

/// Proximity term `1 / (0.1 + d)`.
pub fn proximity(d: f64) -> f64 {
    1.0 / (0.1 + d)
}

/// `w1 / (0.1 + d_t) + w2 (d_prev - d_t) - w3 |a_t - a_prev|`.
pub fn reward(d_t: f64, d_prev: f64, a_t: &Action, a_prev: &Action, w: &RewardWeights) -> f64 {
    w.w1 * proximity(d_t) + w.w2 * (d_prev - d_t) - w.w3 * a_t.distance(a_prev)
}
