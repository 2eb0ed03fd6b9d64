use std::thread;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ddpg::{exploration_noise, Agent, DdpgConfig};
use super::env::{EnvConfig, LocalNavEnv};
use super::imitation::{imitate, ImitationConfig};
use super::mlp::Mlp;
use super::replay::{ReplayBuffer, Transition};
use super::spaces::{Action, Observation, ACTION_DIM};
use crate::error::{invalid, Result};
use crate::sim::SimSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub episodes: usize,
    pub seed: u64,
    /// Decisions taken with uniformly random actions before the policy acts.
    pub warmup_decisions: usize,
    /// Replay size required before learning starts.
    pub update_after: usize,
    pub updates_per_decision: usize,
    /// Exploration standard deviation as a fraction of each action range,
    /// at the first episode.
    pub noise_sigma: f64,
    /// Same, at the last episode; interpolated linearly in between.
    pub noise_final: f64,
    /// Parallel collectors. 1 selects the sequential reference mode.
    pub workers: usize,
    /// Optional actor pretraining before the first episode.
    pub imitation: ImitationConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 40_000,
            seed: 0,
            warmup_decisions: 0,
            update_after: 128,
            updates_per_decision: 1,
            noise_sigma: 0.1,
            noise_final: 0.0,
            workers: 1,
            imitation: ImitationConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(invalid("train.workers", "must be >= 1"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_final >= 0.0) {
            return Err(invalid("train.noise_sigma", "must be >= 0"));
        }
        self.imitation.validate()
    }

    /// Exploration scale for an episode, as a fraction of the ranges.
    pub fn sigma_at(&self, episode: usize) -> f64 {
        let frac = if self.episodes > 1 {
            episode as f64 / (self.episodes - 1) as f64
        } else {
            0.0
        };
        self.noise_sigma + (self.noise_final - self.noise_sigma) * frac
    }

    pub fn episode_seed(&self, episode: usize) -> u64 {
        self.seed ^ (episode as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

/// One row of the reward curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    pub steps: usize,
    pub seed: u64,
}

pub struct TrainOutcome {
    pub agent: Agent,
    pub log: Vec<EpisodeLog>,
    pub aborted_episodes: usize,
}

fn explore(
    agent_actor: &Mlp,
    obs: &Observation,
    sigma_frac: f64,
    random: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Action> {
    if random {
        let u: Vec<f64> = (0..ACTION_DIM).map(|_| rng.random_range(-1.0..=1.0)).collect();
        return Ok(Action::from_unit(&u));
    }
    let a = Action::from_unit(&agent_actor.forward_one(&obs.to_vec())?);
    let widths = Action::range_widths();
    let sigma: [f64; ACTION_DIM] = std::array::from_fn(|i| sigma_frac * widths[i]);
    Ok(exploration_noise(&a, &sigma, rng))
}

/// Result of running one episode with a fixed actor.
struct Rollout {
    transitions: Vec<Transition>,
    log: EpisodeLog,
    aborted: bool,
}

fn rollout(
    settings: &SimSettings,
    env_cfg: &EnvConfig,
    actor: &Mlp,
    episode: usize,
    seed: u64,
    sigma: f64,
    random_until: usize,
) -> Result<Rollout> {
    let mut env = LocalNavEnv::new(settings.clone(), *env_cfg, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut obs = env.observe();
    let mut transitions = Vec::new();
    let mut ret = 0.0;
    let mut aborted = false;
    for k in 0..env.decisions_per_episode() {
        let action = explore(actor, &obs, sigma, k < random_until, &mut rng)?;
        match env.step(&action) {
            Ok(step) => {
                ret += step.reward;
                let t = Transition {
                    obs: obs.to_vec(),
                    action,
                    reward: step.reward,
                    next_obs: step.obs.to_vec(),
                    done: false,
                };
                obs = step.obs;
                if t.is_finite() {
                    transitions.push(t);
                }
            }
            Err(e) => {
                warn!("episode {episode}: simulation aborted at decision {k}: {e}");
                aborted = true;
                break;
            }
        }
    }
    Ok(Rollout {
        log: EpisodeLog {
            episode,
            ret,
            steps: transitions.len(),
            seed,
        },
        transitions,
        aborted,
    })
}

/// DDPG training on the local-navigation task.
///
/// With one worker, transitions are learned from as they are produced and
/// results are bit-reproducible for a seed. With more workers, episodes are
/// collected in rounds by parallel copies of the current actor and the
/// learner then replays the round's updates serially.
pub fn train(
    settings: &SimSettings,
    env_cfg: &EnvConfig,
    ddpg: &DdpgConfig,
    cfg: &TrainConfig,
    mut on_episode: impl FnMut(&EpisodeLog, &Agent),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    env_cfg.validate()?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let obs_dim = Observation::dim_for(settings.model.n_joints);
    let mut agent = Agent::new(obs_dim, ddpg.clone(), &mut init_rng)?;
    let mut buffer = ReplayBuffer::new(ddpg.buffer_capacity, init_rng.random());
    let mut log = Vec::with_capacity(cfg.episodes);
    let mut aborted_episodes = 0;
    let mut decisions_so_far = 0usize;

    if cfg.imitation.rounds > 0 {
        let pre = imitate(settings, env_cfg, &cfg.imitation, &mut agent.actor, init_rng.random())?;
        agent.actor_target = agent.actor.clone();
        info!("actor pretrained on {} samples, loss {:.5}", pre.samples, pre.final_loss);
        for t in pre.transitions {
            buffer.push(t);
        }
    }

    if cfg.workers == 1 {
        for episode in 0..cfg.episodes {
            let seed = cfg.episode_seed(episode);
            let sigma = cfg.sigma_at(episode);
            let mut env = LocalNavEnv::new(settings.clone(), *env_cfg, seed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
            let mut obs = env.observe();
            let mut ret = 0.0;
            let mut steps = 0;
            for k in 0..env.decisions_per_episode() {
                let random = decisions_so_far < cfg.warmup_decisions;
                let action = explore(&agent.actor, &obs, sigma, random, &mut rng)?;
                let step = match env.step(&action) {
                    Ok(s) => s,
                    Err(e) => {
                        warn!("episode {episode}: simulation aborted at decision {k}: {e}");
                        aborted_episodes += 1;
                        break;
                    }
                };
                decisions_so_far += 1;
                ret += step.reward;
                let t = Transition {
                    obs: obs.to_vec(),
                    action,
                    reward: step.reward,
                    next_obs: step.obs.to_vec(),
                    done: false,
                };
                obs = step.obs;
                if t.is_finite() {
                    buffer.push(t);
                    steps += 1;
                }
                if buffer.len() >= cfg.update_after.max(1) {
                    for _ in 0..cfg.updates_per_decision {
                        let batch = buffer.sample(ddpg.batch_size);
                        agent.update(&batch)?;
                    }
                }
            }
            let entry = EpisodeLog {
                episode,
                ret,
                steps,
                seed,
            };
            on_episode(&entry, &agent);
            log.push(entry);
        }
    } else {
        let mut episode = 0;
        while episode < cfg.episodes {
            let round: Vec<usize> = (episode..(episode + cfg.workers).min(cfg.episodes)).collect();
            let actor = agent.actor.clone();
            let random_until = cfg.warmup_decisions.saturating_sub(decisions_so_far);
            let results: Vec<Result<Rollout>> = thread::scope(|s| {
                let handles: Vec<_> = round
                    .iter()
                    .map(|&ep| {
                        let actor = &actor;
                        s.spawn(move || {
                            rollout(
                                settings,
                                env_cfg,
                                actor,
                                ep,
                                cfg.episode_seed(ep),
                                cfg.sigma_at(ep),
                                random_until,
                            )
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("collector thread panicked"))
                    .collect()
            });
            for result in results {
                let r = result?;
                if r.aborted {
                    aborted_episodes += 1;
                }
                let n = r.transitions.len();
                decisions_so_far += n;
                for t in r.transitions {
                    buffer.push(t);
                }
                if buffer.len() >= cfg.update_after.max(1) {
                    for _ in 0..n * cfg.updates_per_decision {
                        let batch = buffer.sample(ddpg.batch_size);
                        agent.update(&batch)?;
                    }
                }
                on_episode(&r.log, &agent);
                log.push(r.log);
            }
            episode += round.len();
        }
    }
    info!(
        "training finished: {} episodes, {} updates, {} aborted",
        log.len(),
        agent.updates,
        aborted_episodes
    );
    Ok(TrainOutcome {
        agent,
        log,
        aborted_episodes,
    })
}

/// Writes the reward curve as CSV with columns `episode,return,steps,seed`.
pub fn write_reward_csv<W: std::io::Write>(w: W, log: &[EpisodeLog]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in log {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}
