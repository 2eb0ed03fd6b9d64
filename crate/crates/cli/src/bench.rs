//! Wall-clock comparison of the oscillator action interface against a
//! learner acting directly on joint torques every control tick.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use log::warn;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use snakenav_core::dynamics::ConfigState;
use snakenav_core::rl::{
    build_observation, exploration_noise, planar_distance, proximity, Action, Agent, EnvConfig, LocalNavEnv,
    Observation, ReplayBuffer, Transition, WaypointPose, ACTION_DIM,
};
use snakenav_core::sim::Simulator;
use snakenav_core::{Error, Result};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    /// Simulated time run in each mode, s.
    pub sim_seconds: f64,
    pub seed: u64,
    /// Exploration standard deviation as a fraction of each action range.
    pub noise_sigma: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sim_seconds: 20.0,
            seed: 0,
            noise_sigma: 0.1,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sim_seconds > 0.0 && self.sim_seconds.is_finite()) {
            return Err(Error::InvalidParam {
                name: "bench.sim_seconds".into(),
                reason: "must be > 0".into(),
            });
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidParam {
                name: "bench.noise_sigma".into(),
                reason: "must be >= 0".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub mode: String,
    pub action_dim: usize,
    /// Policy decisions taken.
    pub env_steps: u64,
    /// Episodes restarted after a non-finite simulation state.
    pub resets: u64,
    pub learner_updates: u64,
    pub sim_seconds: f64,
    pub wall_seconds: f64,
    pub steps_per_second: f64,
    pub updates_per_sim_second: f64,
    pub wall_per_sim_second: f64,
    /// Extrapolated wall-clock for 1e5 environment steps, s.
    pub wall_per_1e5_steps: f64,
}

impl ModeReport {
    fn new(mode: &str, action_dim: usize, env_steps: u64, resets: u64, updates: u64, sim: f64, wall: f64) -> Self {
        Self {
            mode: mode.to_string(),
            action_dim,
            env_steps,
            resets,
            learner_updates: updates,
            sim_seconds: sim,
            wall_seconds: wall,
            steps_per_second: env_steps as f64 / wall,
            updates_per_sim_second: updates as f64 / sim,
            wall_per_sim_second: wall / sim,
            wall_per_1e5_steps: wall / env_steps as f64 * 1e5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rl_cpg: ModeReport,
    pub joint_space: ModeReport,
    /// Learner updates per simulated second, joint space over oscillator.
    pub update_ratio: f64,
    /// Oscillator mode needs less wall-clock per simulated second.
    pub rl_cpg_faster: bool,
}

/// Oscillator interface: one decision and one learner update per decision
/// period.
pub fn bench_rl_cpg(cfg: &RunConfig) -> Result<ModeReport> {
    let b = &cfg.bench;
    let settings = cfg.sim_settings()?;
    let env_cfg = EnvConfig {
        episode_secs: b.sim_seconds,
        ..cfg.env
    };
    let mut env = LocalNavEnv::new(settings.clone(), env_cfg, b.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
    let obs_dim = Observation::dim_for(settings.model.n_joints);
    let mut agent = Agent::new(obs_dim, cfg.ddpg.clone(), &mut rng)?;
    let mut buffer = ReplayBuffer::new(cfg.ddpg.buffer_capacity, b.seed);
    let obs0 = env.observe().to_vec();
    for _ in 0..cfg.ddpg.batch_size {
        let u: Vec<f64> = (0..ACTION_DIM).map(|_| rng.random_range(-1.0..=1.0)).collect();
        buffer.push(Transition {
            obs: obs0.clone(),
            action: Action::from_unit(&u),
            reward: 0.0,
            next_obs: obs0.clone(),
            done: false,
        });
    }
    let widths = Action::range_widths();
    let sigma: [f64; ACTION_DIM] = std::array::from_fn(|i| b.noise_sigma * widths[i]);
    let decisions = env.decisions_per_episode();
    let mut obs = env.observe();
    let mut resets = 0;
    let start = Instant::now();
    for _ in 0..decisions {
        let action = exploration_noise(&agent.act(&obs)?, &sigma, &mut rng);
        match env.step(&action) {
            Ok(step) => {
                buffer.push(Transition {
                    obs: obs.to_vec(),
                    action,
                    reward: step.reward,
                    next_obs: step.obs.to_vec(),
                    done: false,
                });
                obs = step.obs;
            }
            Err(e) => {
                warn!("rl_cpg bench: episode restarted: {e}");
                resets += 1;
                obs = env.reset()?;
            }
        }
        let batch = buffer.sample(cfg.ddpg.batch_size);
        agent.update(&batch)?;
    }
    let wall = start.elapsed().as_secs_f64();
    let sim = decisions as f64 * settings.timing.decision_dt;
    Ok(ModeReport::new("rl_cpg", ACTION_DIM, decisions as u64, resets, agent.updates, sim, wall))
}

/// Joint-space baseline: the same networks emit one torque per joint,
/// scaled by the PID saturation, and learn once per control tick.
pub fn bench_joint_space(cfg: &RunConfig) -> Result<ModeReport> {
    let b = &cfg.bench;
    let settings = cfg.sim_settings()?;
    let n = settings.model.n_joints;
    let u_max = settings.pid.u_max;
    let ticks = (b.sim_seconds / settings.timing.control_dt).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
    let init = ConfigState::resting(&settings.model, 0.0, 0.0, 0.0);
    let mut sim = Simulator::new(settings.clone(), init.clone())?;
    let goal = WaypointPose {
        position: [cfg.env.arena_size / 4.0, 0.0, settings.model.link_height / 2.0],
        yaw: 0.0,
    };
    let obs_dim = Observation::dim_for(n);
    let mut agent = Agent::with_action_dim(obs_dim, n, cfg.ddpg.clone(), &mut rng)?;
    let batch = cfg.ddpg.batch_size;
    let capacity = cfg.ddpg.buffer_capacity;
    let mut obs_buf: Vec<Vec<f64>> = Vec::new();
    let mut act_buf: Vec<Vec<f64>> = Vec::new();
    let mut rew_buf: Vec<f64> = Vec::new();
    let mut next_buf: Vec<Vec<f64>> = Vec::new();
    let obs0 = build_observation(&sim.state, &settings.model, &sim.head_accel(), &goal).to_vec();
    for _ in 0..batch {
        obs_buf.push(obs0.clone());
        act_buf.push((0..n).map(|_| rng.random_range(-1.0..=1.0)).collect());
        rew_buf.push(0.0);
        next_buf.push(obs0.clone());
    }
    let noise = Normal::new(0.0, 2.0 * b.noise_sigma.max(1e-12)).expect("finite sigma");
    let w = cfg.env.reward;
    let mut d_prev = planar_distance(&settings.model, &sim.state, &goal);
    let mut resets = 0;
    let start = Instant::now();
    for t in 0..ticks {
        let obs = build_observation(&sim.state, &settings.model, &sim.head_accel(), &goal).to_vec();
        let u: Vec<f64> = agent
            .actor
            .forward_one(&obs)?
            .iter()
            .map(|v| (v + noise.sample(&mut rng)).clamp(-1.0, 1.0))
            .collect();
        let torque: Vec<f64> = u.iter().map(|v| v * u_max).collect();
        if let Err(e) = sim.apply_torques(&torque) {
            warn!("joint_space bench: episode restarted: {e}");
            resets += 1;
            sim = Simulator::new(settings.clone(), init.clone())?;
            d_prev = planar_distance(&settings.model, &sim.state, &goal);
        } else {
            let d = planar_distance(&settings.model, &sim.state, &goal);
            let r = w.w1 * proximity(d) + w.w2 * (d_prev - d);
            d_prev = d;
            let next = build_observation(&sim.state, &settings.model, &sim.head_accel(), &goal).to_vec();
            if obs_buf.len() < capacity {
                obs_buf.push(obs);
                act_buf.push(u);
                rew_buf.push(r);
                next_buf.push(next);
            } else {
                let k = (batch + t) % capacity;
                obs_buf[k] = obs;
                act_buf[k] = u;
                rew_buf[k] = r;
                next_buf[k] = next;
            }
        }
        let idx = index::sample(&mut rng, obs_buf.len(), batch);
        let rows: Vec<usize> = idx.iter().collect();
        agent.update_unit(
            &DMatrix::from_fn(batch, obs_dim, |i, j| obs_buf[rows[i]][j]),
            &DMatrix::from_fn(batch, n, |i, j| act_buf[rows[i]][j]),
            &DVector::from_fn(batch, |i, _| rew_buf[rows[i]]),
            &DVector::from_element(batch, 1.0),
            &DMatrix::from_fn(batch, obs_dim, |i, j| next_buf[rows[i]][j]),
        )?;
    }
    let wall = start.elapsed().as_secs_f64();
    let sim_seconds = ticks as f64 * settings.timing.control_dt;
    Ok(ModeReport::new("joint_space", n, ticks as u64, resets, agent.updates, sim_seconds, wall))
}

pub fn bench(cfg: &RunConfig) -> Result<BenchReport> {
    let rl_cpg = bench_rl_cpg(cfg)?;
    let joint_space = bench_joint_space(cfg)?;
    Ok(BenchReport {
        update_ratio: joint_space.updates_per_sim_second / rl_cpg.updates_per_sim_second,
        rl_cpg_faster: rl_cpg.wall_per_sim_second < joint_space.wall_per_sim_second,
        rl_cpg,
        joint_space,
    })
}

impl BenchReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for m in [&self.rl_cpg, &self.joint_space] {
            s.push_str(&format!(
                "{:<12} action_dim={:<3} steps={:<6} resets={:<3} updates={:<6} sim={:.1}s wall={:.2}s steps/s={:.1} updates/sim_s={:.2} wall/sim_s={:.3} wall/1e5_steps={:.1}s\n",
                m.mode,
                m.action_dim,
                m.env_steps,
                m.resets,
                m.learner_updates,
                m.sim_seconds,
                m.wall_seconds,
                m.steps_per_second,
                m.updates_per_sim_second,
                m.wall_per_sim_second,
                m.wall_per_1e5_steps
            ));
        }
        s.push_str(&format!(
            "update_ratio={:.3} rl_cpg_faster={}\n",
            self.update_ratio, self.rl_cpg_faster
        ));
        s
    }
}
