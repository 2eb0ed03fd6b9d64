use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Mlp};
use super::optim::{Optimizer, OptimizerConfig};
use super::replay::Transition;
use super::spaces::{Action, Observation, ACTION_DIM};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DdpgConfig {
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub hidden: Vec<usize>,
    pub buffer_capacity: usize,
    pub optimizer: OptimizerConfig,
    /// Initial weight scale of both output layers.
    pub final_init: f64,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            batch_size: 128,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            hidden: vec![256, 256],
            buffer_capacity: 1_000_000,
            optimizer: OptimizerConfig::default(),
            final_init: 3e-3,
        }
    }
}

impl DdpgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(invalid("ddpg.gamma", "must be in [0, 1]"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(invalid("ddpg.tau", "must be in (0, 1]"));
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 {
            return Err(invalid("ddpg.batch_size", "batch size and buffer capacity must be > 0"));
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return Err(invalid("ddpg.actor_lr", "learning rates must be > 0"));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(invalid("ddpg.hidden", "need at least one nonempty hidden layer"));
        }
        if !(self.final_init >= 0.0 && self.final_init.is_finite()) {
            return Err(invalid("ddpg.final_init", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_objective: f64,
}

/// Policy action for an observation. The actor emits `tanh` outputs that are
/// mapped affinely onto the action ranges.
pub fn actor_forward(net: &Mlp, obs: &Observation) -> Result<Action> {
    let u = net.forward_one(&obs.to_vec())?;
    Ok(Action::from_unit(&u))
}

fn critic_input(obs: &[f64], unit_action: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(obs.len() + ACTION_DIM);
    x.extend_from_slice(obs);
    x.extend_from_slice(unit_action);
    x
}

/// Q-value of an observation-action pair. The critic sees the action in
/// unit coordinates.
pub fn critic_forward(net: &Mlp, obs: &Observation, act: &Action) -> Result<f64> {
    Ok(net.forward_one(&critic_input(&obs.to_vec(), &act.to_unit()))?[0])
}

/// `∂Q/∂a` in physical action units.
pub fn critic_action_gradient(net: &Mlp, obs: &Observation, act: &Action) -> Result<[f64; ACTION_DIM]> {
    let x = critic_input(&obs.to_vec(), &act.to_unit());
    let cache = net.forward_cached(&DMatrix::from_row_slice(1, x.len(), &x))?;
    let (_, gx) = net.backward(&cache, &DMatrix::from_element(1, 1, 1.0));
    let obs_dim = x.len() - ACTION_DIM;
    let widths = Action::range_widths();
    Ok(std::array::from_fn(|i| gx[(0, obs_dim + i)] * 2.0 / widths[i]))
}

/// Gaussian perturbation with per-dimension standard deviation, clipped
/// back into the action ranges.
pub fn exploration_noise<R: Rng + ?Sized>(action: &Action, sigma: &[f64; ACTION_DIM], rng: &mut R) -> Action {
    let a = action.to_array();
    let v: Vec<f64> = (0..ACTION_DIM)
        .map(|i| {
            if sigma[i] > 0.0 {
                a[i] + Normal::new(0.0, sigma[i]).expect("finite sigma").sample(rng)
            } else {
                a[i]
            }
        })
        .collect();
    Action::from_slice(&v)
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub config: DdpgConfig,
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    actor_opt: Optimizer,
    critic_opt: Optimizer,
    pub updates: u64,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, config: DdpgConfig, rng: &mut R) -> Result<Self> {
        Self::with_action_dim(obs_dim, ACTION_DIM, config, rng)
    }

    /// Agent over an arbitrary unit-box action space.
    pub fn with_action_dim<R: Rng + ?Sized>(
        obs_dim: usize,
        action_dim: usize,
        config: DdpgConfig,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend(&config.hidden);
        actor_sizes.push(action_dim);
        let mut critic_sizes = vec![obs_dim + action_dim];
        critic_sizes.extend(&config.hidden);
        critic_sizes.push(1);
        let actor = Mlp::new(&actor_sizes, Activation::Relu, Activation::Tanh, config.final_init, rng);
        let critic = Mlp::new(&critic_sizes, Activation::Relu, Activation::Identity, config.final_init, rng);
        Ok(Self::from_networks(config, actor, critic))
    }

    pub fn from_networks(config: DdpgConfig, actor: Mlp, critic: Mlp) -> Self {
        Self {
            actor_opt: Optimizer::new(config.optimizer, config.actor_lr, &actor),
            critic_opt: Optimizer::new(config.optimizer, config.critic_lr, &critic),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            config,
            updates: 0,
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn act(&self, obs: &Observation) -> Result<Action> {
        actor_forward(&self.actor, obs)
    }

    pub fn act_raw(&self, obs: &[f64]) -> Result<Action> {
        Ok(Action::from_unit(&self.actor.forward_one(obs)?))
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_dim()
    }

    /// One critic step, one actor step and a soft target update.
    pub fn update(&mut self, batch: &[&Transition]) -> Result<UpdateStats> {
        if batch.is_empty() {
            return Err(invalid("batch", "must not be empty"));
        }
        let b = batch.len();
        let d = self.obs_dim();
        let units: Vec<[f64; ACTION_DIM]> = batch.iter().map(|t| t.action.to_unit()).collect();
        self.update_unit(
            &DMatrix::from_fn(b, d, |i, j| batch[i].obs[j]),
            &DMatrix::from_fn(b, ACTION_DIM, |i, j| units[i][j]),
            &DVector::from_fn(b, |i, _| batch[i].reward),
            &DVector::from_fn(b, |i, _| if batch[i].done { 0.0 } else { 1.0 }),
            &DMatrix::from_fn(b, d, |i, j| batch[i].next_obs[j]),
        )
    }

    /// [`Agent::update`] on a batch given as matrices with one sample per
    /// row and actions in unit coordinates.
    pub fn update_unit(
        &mut self,
        s: &DMatrix<f64>,
        u: &DMatrix<f64>,
        rewards: &DVector<f64>,
        not_done: &DVector<f64>,
        s_next: &DMatrix<f64>,
    ) -> Result<UpdateStats> {
        let b = s.nrows();
        let d = self.obs_dim();
        let k = self.action_dim();
        if b == 0 {
            return Err(invalid("batch", "must not be empty"));
        }
        for (what, expected, actual) in [
            ("batch observations", d, s.ncols()),
            ("batch next observations", d, s_next.ncols()),
            ("batch actions", k, u.ncols()),
            ("batch rows", b, u.nrows().min(rewards.len()).min(not_done.len()).min(s_next.nrows())),
        ] {
            if expected != actual {
                return Err(Error::Dimension {
                    what,
                    expected,
                    actual,
                });
            }
        }
        let u_next = self.actor_target.forward(s_next)?;
        let q_next = self.critic_target.forward(&hcat(s_next, &u_next))?;
        let y = rewards + (not_done.component_mul(&q_next.column(0))) * self.config.gamma;

        let cache = self.critic.forward_cached(&hcat(s, u))?;
        let err = cache.output().column(0) - &y;
        let critic_loss = err.norm_squared() / b as f64;
        if !critic_loss.is_finite() {
            return Err(Error::NonFinite("critic loss"));
        }
        let grad_q = DMatrix::from_fn(b, 1, |i, _| 2.0 * err[i] / b as f64);
        let (g, _) = self.critic.backward(&cache, &grad_q);
        self.critic_opt.step(&mut self.critic, &g);

        let actor_cache = self.actor.forward_cached(s)?;
        let critic_cache = self.critic.forward_cached(&hcat(s, actor_cache.output()))?;
        let actor_objective = critic_cache.output().mean();
        if !actor_objective.is_finite() {
            return Err(Error::NonFinite("actor objective"));
        }
        let (_, gx) = self
            .critic
            .backward(&critic_cache, &DMatrix::from_element(b, 1, -1.0 / b as f64));
        let grad_u = gx.columns(d, k).into_owned();
        let (ga, _) = self.actor.backward(&actor_cache, &grad_u);
        self.actor_opt.step(&mut self.actor, &ga);

        self.soft_update(self.config.tau);
        self.updates += 1;
        if !(self.actor.is_finite() && self.critic.is_finite()) {
            return Err(Error::NonFinite("network parameters"));
        }
        Ok(UpdateStats {
            critic_loss,
            actor_objective,
        })
    }

    pub fn soft_update(&mut self, tau: f64) {
        self.actor_target.soft_update_from(&self.actor, tau);
        self.critic_target.soft_update_from(&self.critic, tau);
    }
}

fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    m.columns_mut(0, a.ncols()).copy_from(a);
    m.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    m
}
