//! Proximal policy optimization with a clipped surrogate objective.
//!
//! One training iteration collects a fixed-horizon rollout (episodes that end
//! mid-rollout are respawned), computes GAE advantages and value targets,
//! then runs several epochs of shuffled minibatch Adam steps on
//! `clip loss + value_coef·(V − G)² − entropy_coef·H`.

mod buffer;
mod loss;
mod rollout;
mod trainer;
mod update;

pub use buffer::{discounted_return, gae, normalize_advantages, RolloutBuffer, Transition};
pub use loss::{clipped_surrogate_loss, sample_loss, SampleLoss};
pub use rollout::{collect_rollout, EnvStep, Environment, Rollout, Runner};
pub use trainer::{train, MemorySink, TrainSink, TrainSummary, Trainer, TrainerState};
pub use update::{ppo_update, UpdateStats};

use crate::eval::EvalError;
use crate::nn::NnError;
use crate::world::WorldError;

#[derive(Debug, thiserror::Error)]
pub enum PpoError {
    #[error("invalid PPO config: {0}")]
    Config(String),
    #[error("non-finite {0}; update aborted, weights kept")]
    NonFinite(String),
    #[error("rollout buffer has no advantages; call compute_advantages first")]
    NotReady,
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("output: {0}")]
    Sink(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub learning_rate: f64,
    pub epochs_per_update: usize,
    pub minibatch_size: usize,
    pub rollout_horizon: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub total_episodes: u64,
    /// Multiplies rewards before they enter value targets and advantages.
    pub reward_scale: f64,
    /// Write a checkpoint every this many updates (and after the last).
    pub checkpoint_every: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            learning_rate: 3e-4,
            epochs_per_update: 4,
            minibatch_size: 64,
            rollout_horizon: 2048,
            value_coef: 0.5,
            entropy_coef: 0.01,
            total_episodes: 1500,
            reward_scale: 0.01,
            checkpoint_every: 10,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), PpoError> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(PpoError::Config(format!(
                    "{name} must lie in (0, 1], got {v}"
                )))
            }
        };
        unit("gamma", self.gamma)?;
        unit("gae_lambda", self.gae_lambda)?;
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return Err(PpoError::Config(format!(
                "clip_epsilon must lie in (0, 1), got {}",
                self.clip_epsilon
            )));
        }
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("reward_scale", self.reward_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(PpoError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("value_coef", self.value_coef),
            ("entropy_coef", self.entropy_coef),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(PpoError::Config(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("epochs_per_update", self.epochs_per_update as u64),
            ("minibatch_size", self.minibatch_size as u64),
            ("rollout_horizon", self.rollout_horizon as u64),
            ("checkpoint_every", self.checkpoint_every),
        ] {
            if v == 0 {
                return Err(PpoError::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}
