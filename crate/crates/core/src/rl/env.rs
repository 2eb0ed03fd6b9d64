use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::reward::{reward, RewardWeights};
use super::spaces::{build_observation, planar_distance, Action, Observation, WaypointPose};
use crate::dynamics::{ConfigState, ExternalContact};
use crate::error::{invalid, Result};
use crate::sim::{SimSettings, Simulator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    /// Simulated length of an episode, s.
    pub episode_secs: f64,
    /// Side of the square goal area centred on the start, m.
    pub arena_size: f64,
    /// Goal counts as reached within this planar distance of the head, m.
    pub arrival_radius: f64,
    pub reward: RewardWeights,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            episode_secs: 160.0,
            arena_size: 8.0,
            arrival_radius: 0.3,
            reward: RewardWeights::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.episode_secs > 0.0 && self.episode_secs.is_finite()) {
            return Err(invalid("env.episode_secs", "must be > 0"));
        }
        if !(self.arena_size > 0.0 && self.arena_size.is_finite()) {
            return Err(invalid("env.arena_size", "must be > 0"));
        }
        if !(self.arrival_radius > 0.0) {
            return Err(invalid("env.arrival_radius", "must be > 0"));
        }
        self.reward.validate()
    }
}

/// Result of one policy decision.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub obs: Observation,
    pub reward: f64,
    /// Planar head-goal distance after the decision, m.
    pub distance: f64,
    /// Goals reached (and respawned) during the decision.
    pub goals_reached: usize,
    /// Control ticks run for this decision.
    pub control_ticks: usize,
    /// The episode horizon has been reached.
    pub done: bool,
}

/// Goal-reaching task: the robot starts at the origin with a random
/// heading and a goal is drawn uniformly in the arena. Reaching the goal
/// respawns it; the episode runs for a fixed horizon.
pub struct LocalNavEnv {
    pub settings: SimSettings,
    pub config: EnvConfig,
    pub sim: Simulator,
    pub goal: WaypointPose,
    obstacles: Option<Arc<dyn ExternalContact + Send + Sync>>,
    rng: ChaCha8Rng,
    prev_action: Option<Action>,
    pub decisions: usize,
    pub goals_reached: usize,
}

impl LocalNavEnv {
    pub fn new(settings: SimSettings, config: EnvConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let init = ConfigState::resting(&settings.model, 0.0, 0.0, 0.0);
        let sim = Simulator::new(settings.clone(), init)?;
        let mut env = Self {
            settings,
            config,
            sim,
            goal: WaypointPose {
                position: [0.0; 3],
                yaw: 0.0,
            },
            obstacles: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
            prev_action: None,
            decisions: 0,
            goals_reached: 0,
        };
        env.reset()?;
        Ok(env)
    }

    pub fn with_obstacles(mut self, obstacles: Arc<dyn ExternalContact + Send + Sync>) -> Result<Self> {
        self.obstacles = Some(obstacles);
        self.reset()?;
        Ok(self)
    }

    pub fn decisions_per_episode(&self) -> usize {
        (self.config.episode_secs / self.settings.timing.decision_dt).round() as usize
    }

    pub fn reset(&mut self) -> Result<Observation> {
        let yaw = self.rng.random_range(-PI..PI);
        let init = ConfigState::resting(&self.settings.model, 0.0, 0.0, yaw);
        let mut sim = Simulator::new(self.settings.clone(), init)?;
        if let Some(o) = &self.obstacles {
            sim = sim.with_obstacles(o.clone());
        }
        self.sim = sim;
        self.prev_action = None;
        self.decisions = 0;
        self.goals_reached = 0;
        self.respawn_goal();
        Ok(self.observe())
    }

    fn respawn_goal(&mut self) {
        let half = self.config.arena_size / 2.0;
        let head = self.sim.state.head_position(self.sim.model());
        loop {
            let x = self.rng.random_range(-half..=half);
            let y = self.rng.random_range(-half..=half);
            if (x - head.x).hypot(y - head.y) > self.config.arrival_radius {
                self.goal = WaypointPose {
                    position: [x, y, self.sim.model().link_height / 2.0],
                    yaw: (y - head.y).atan2(x - head.x),
                };
                return;
            }
        }
    }

    pub fn distance(&self) -> f64 {
        planar_distance(self.sim.model(), &self.sim.state, &self.goal)
    }

    pub fn observe(&self) -> Observation {
        build_observation(&self.sim.state, self.sim.model(), &self.sim.head_accel(), &self.goal)
    }

    /// Applies an action for one decision period.
    pub fn step(&mut self, action: &Action) -> Result<StepResult> {
        let action = Action::from_slice(&action.to_array());
        self.sim.set_command(action.gait_command());
        let mut d_start = self.distance();
        let mut reached = 0;
        let ticks = self.settings.timing.ticks_per_decision();
        for _ in 0..ticks {
            self.sim.control_tick()?;
            if self.distance() < self.config.arrival_radius {
                reached += 1;
                self.respawn_goal();
                d_start = self.distance();
            }
        }
        let d = self.distance();
        let prev = self.prev_action.unwrap_or(action);
        let r = reward(d, d_start, &action, &prev, &self.config.reward);
        self.prev_action = Some(action);
        self.decisions += 1;
        self.goals_reached += reached;
        Ok(StepResult {
            obs: self.observe(),
            reward: r,
            distance: d,
            goals_reached: reached,
            control_ticks: ticks,
            done: self.decisions >= self.decisions_per_episode(),
        })
    }
}
