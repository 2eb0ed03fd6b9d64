//! Local navigation: a DDPG agent choosing gait parameters from ego-centric
//! observations, its networks, replay memory, environment and training loop.

pub mod checkpoint;
pub mod ddpg;
pub mod env;
pub mod expert;
pub mod imitation;
pub mod mlp;
pub mod optim;
pub mod replay;
pub mod reward;
pub mod spaces;
pub mod train;

pub use checkpoint::Checkpoint;
pub use ddpg::{
    actor_forward, critic_action_gradient, critic_forward, exploration_noise, Agent, DdpgConfig, UpdateStats,
};
pub use env::{EnvConfig, LocalNavEnv, StepResult};
pub use expert::{expert_action, ExpertConfig};
pub use imitation::{imitate, ImitationConfig, ImitationOutcome};
pub use mlp::{Activation, ForwardCache, Gradients, Layer, Mlp};
pub use optim::{Optimizer, OptimizerConfig, OptimizerKind};
pub use replay::{ReplayBuffer, Transition};
pub use reward::{proximity, reward, RewardWeights};
pub use spaces::{axis_angle, build_observation, planar_distance, Action, Observation, WaypointPose, ACTION_DIM};
pub use train::{train, write_reward_csv, EpisodeLog, TrainConfig, TrainOutcome};
