//! Actor pretraining by imitation of the scripted controller.
//!
//! Round 0 rolls out the controller itself; later rounds roll out the actor
//! and label every visited observation with the controller's action. The
//! actor is regressed onto the aggregated labels in unit action space.

use log::{info, warn};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ddpg::actor_forward;
use super::env::{EnvConfig, LocalNavEnv};
use super::expert::{expert_action, ExpertConfig};
use super::mlp::Mlp;
use super::optim::{Optimizer, OptimizerConfig, OptimizerKind};
use super::replay::Transition;
use super::spaces::ACTION_DIM;
use crate::error::{invalid, Result};
use crate::sim::SimSettings;

/// Largest magnitude of a unit-space regression target.
const TARGET_LIMIT: f64 = 0.97;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImitationConfig {
    /// Data-collection rounds; 0 disables pretraining.
    pub rounds: usize,
    pub episodes_per_round: usize,
    /// Passes over the aggregated data after each round.
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub expert: ExpertConfig,
}

impl Default for ImitationConfig {
    fn default() -> Self {
        Self {
            rounds: 0,
            episodes_per_round: 20,
            epochs: 20,
            batch_size: 64,
            lr: 1e-3,
            expert: ExpertConfig::default(),
        }
    }
}

impl ImitationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds > 0 && (self.episodes_per_round == 0 || self.batch_size == 0) {
            return Err(invalid("train.imitation", "episodes_per_round and batch_size must be >= 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(invalid("train.imitation.lr", "must be > 0"));
        }
        self.expert.validate()
    }
}

pub struct ImitationOutcome {
    /// Labelled observations after the last round.
    pub samples: usize,
    /// Mean squared unit-space error over the last epoch.
    pub final_loss: f64,
    /// Environment transitions of every rollout, in collection order.
    pub transitions: Vec<Transition>,
}

/// Pretrains `actor` in place. Deterministic for a seed.
pub fn imitate(
    settings: &SimSettings,
    env_cfg: &EnvConfig,
    cfg: &ImitationConfig,
    actor: &mut Mlp,
    seed: u64,
) -> Result<ImitationOutcome> {
    cfg.validate()?;
    let model = &settings.model;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opt_cfg = OptimizerConfig {
        kind: OptimizerKind::Adam,
        rho: 0.999,
        ..OptimizerConfig::default()
    };
    let mut opt = Optimizer::new(opt_cfg, cfg.lr, actor);
    let mut inputs: Vec<Vec<f64>> = Vec::new();
    let mut targets: Vec<[f64; ACTION_DIM]> = Vec::new();
    let mut transitions = Vec::new();
    let mut final_loss = 0.0;
    for round in 0..cfg.rounds {
        for episode in 0..cfg.episodes_per_round {
            let ep_seed = seed ^ ((round * cfg.episodes_per_round + episode) as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03);
            let mut env = LocalNavEnv::new(settings.clone(), *env_cfg, ep_seed)?;
            let mut obs = env.observe();
            for k in 0..env.decisions_per_episode() {
                let label = expert_action(model, &obs, &cfg.expert)?;
                let action = if round == 0 { label } else { actor_forward(actor, &obs)? };
                inputs.push(obs.to_vec());
                targets.push(label.to_unit().map(|v| v.clamp(-TARGET_LIMIT, TARGET_LIMIT)));
                match env.step(&action) {
                    Ok(step) => {
                        let t = Transition {
                            obs: obs.to_vec(),
                            action,
                            reward: step.reward,
                            next_obs: step.obs.to_vec(),
                            done: false,
                        };
                        if t.is_finite() {
                            transitions.push(t);
                        }
                        obs = step.obs;
                    }
                    Err(e) => {
                        warn!("imitation round {round}: simulation aborted at decision {k}: {e}");
                        break;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            let mut sum = 0.0;
            for chunk in order.chunks(cfg.batch_size) {
                let x = DMatrix::from_fn(chunk.len(), actor.input_dim(), |r, c| inputs[chunk[r]][c]);
                let cache = actor.forward_cached(&x)?;
                let scale = 2.0 / chunk.len() as f64;
                let mut grad = DMatrix::zeros(chunk.len(), ACTION_DIM);
                for (r, &i) in chunk.iter().enumerate() {
                    for c in 0..ACTION_DIM {
                        let e = cache.output()[(r, c)] - targets[i][c];
                        sum += e * e;
                        grad[(r, c)] = scale * e;
                    }
                }
                let (grads, _) = actor.backward(&cache, &grad);
                opt.step(actor, &grads);
            }
            final_loss = sum / order.len() as f64;
        }
        info!("imitation round {round}: {} samples, loss {final_loss:.5}", inputs.len());
    }
    Ok(ImitationOutcome {
        samples: inputs.len(),
        final_loss,
        transitions,
    })
}
