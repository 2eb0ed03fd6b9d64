//! The single run configuration file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use snakenav_core::contact::GroundParams;
use snakenav_core::control::PidGains;
use snakenav_core::dynamics::{RobotModel, RobotParams};
use snakenav_core::navigator::{EvalConfig, NavConfig};
use snakenav_core::planner::Spacing;
use snakenav_core::rl::{DdpgConfig, EnvConfig, TrainConfig};
use snakenav_core::sim::{GaitConfig, SimSettings, Timing};
use snakenav_core::{Error, Result};

use crate::bench::BenchConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NavigationSection {
    pub arrival_radius: f64,
    /// Simulated time allowed for a navigation run, s.
    pub time_budget: f64,
}

impl Default for NavigationSection {
    fn default() -> Self {
        Self {
            arrival_radius: 0.3,
            time_budget: 600.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub mazes: usize,
    pub seed: u64,
    pub min_cells: usize,
    pub max_cells: usize,
    /// Simulated time allowed per planned waypoint, s.
    pub time_per_waypoint: f64,
    pub workers: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        let c = EvalConfig::default();
        Self {
            mazes: 10,
            seed: 0,
            min_cells: c.min_cells,
            max_cells: c.max_cells,
            time_per_waypoint: c.time_per_waypoint,
            workers: c.workers,
        }
    }
}

impl EvalSection {
    pub fn config(&self) -> EvalConfig {
        EvalConfig {
            min_cells: self.min_cells,
            max_cells: self.max_cells,
            time_per_waypoint: self.time_per_waypoint,
            workers: self.workers,
        }
    }
}

/// Every tunable of the stack. Missing keys take their defaults; unknown
/// keys are rejected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub robot: RobotParams,
    pub ground: GroundParams,
    /// Penalty parameters of maze walls; only `k1` and `k2` are used.
    pub walls: GroundParams,
    pub pid: PidGains,
    pub gait: GaitConfig,
    pub timing: Timing,
    pub env: EnvConfig,
    pub ddpg: DdpgConfig,
    pub train: TrainConfig,
    pub spacing: Spacing,
    pub navigation: NavigationSection,
    pub eval: EvalSection,
    pub bench: BenchConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        RobotModel::new(&self.robot)?;
        self.ground.validate()?;
        self.walls.validate()?;
        self.pid.validate()?;
        self.gait.validate()?;
        self.timing.validate()?;
        self.env.validate()?;
        self.ddpg.validate()?;
        self.train.validate()?;
        self.spacing.validate()?;
        self.bench.validate()?;
        if !(self.navigation.arrival_radius > 0.0) {
            return Err(Error::InvalidParam {
                name: "navigation.arrival_radius".into(),
                reason: "must be > 0".into(),
            });
        }
        if !(self.navigation.time_budget > 0.0) {
            return Err(Error::InvalidParam {
                name: "navigation.time_budget".into(),
                reason: "must be > 0".into(),
            });
        }
        let e = &self.eval;
        if e.min_cells < 2 || e.max_cells < e.min_cells || !(e.time_per_waypoint > 0.0) || e.workers == 0 {
            return Err(Error::InvalidParam {
                name: "eval".into(),
                reason: "require 2 <= min_cells <= max_cells, time_per_waypoint > 0, workers >= 1".into(),
            });
        }
        Ok(())
    }

    pub fn sim_settings(&self) -> Result<SimSettings> {
        Ok(SimSettings {
            model: RobotModel::new(&self.robot)?,
            ground: self.ground,
            pid: self.pid,
            gait: self.gait,
            timing: self.timing,
        })
    }

    pub fn nav_config(&self) -> NavConfig {
        NavConfig {
            arrival_radius: self.navigation.arrival_radius,
            spacing: self.spacing,
            reward: self.env.reward,
            walls: self.walls,
        }
    }

    /// Forces the sequential reference mode everywhere.
    pub fn single_threaded(&mut self) {
        self.train.workers = 1;
        self.eval.workers = 1;
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.train.seed = seed;
        self.eval.seed = seed;
        self.bench.seed = seed;
    }
}
