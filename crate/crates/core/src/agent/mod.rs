//! PPO-clip actor-critic training with Adam, and the freeze/resume
//! policy manager.

mod adam;
mod buffer;
mod freeze;
mod returns;
mod trainer;

pub use adam::{Adam, BETA1, BETA2, EPSILON};
pub use buffer::{TrajectoryBuffer, Transition};
pub use freeze::{FreezeEvent, FreezeState};
pub use returns::{advantages, discounted_returns, gae, normalize, ppo_clip_objective, ppo_clip_slope, value_loss};
pub use trainer::{
    actor_objective, argmax, critic_loss, sample_action, Batch, EpisodeRecord, FreezeConfig, Trainer, TrainerConfig,
    TrainerState,
};
