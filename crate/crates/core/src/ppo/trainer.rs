use std::collections::VecDeque;

use super::rollout::{collect_rollout, Environment, Runner};
use super::update::{ppo_update, UpdateStats};
use super::{PpoConfig, PpoError};
use crate::checkpoint::Checkpoint;
use crate::eval::{trailing_mean, EpisodeRecord};
use crate::nn::{AdamState, ArchConfig, NetworkWeights};
use crate::seed::{derive_seed, rng_for, Stream};

/// Everything beyond weights and optimizer moments that a resumed run needs
/// to continue exactly where the original left off.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerState {
    pub master_seed: u64,
    pub episode_index: u64,
    pub episode_seed: u64,
    pub episode_steps: u64,
    pub episode_return: f64,
    pub episode_path: f64,
    pub window: u64,
    /// Returns of the latest `window` finished episodes, oldest first.
    pub recent_returns: Vec<f64>,
    pub env_snapshot: Vec<f64>,
}

/// Receives training output as it is produced. An error aborts training.
pub trait TrainSink {
    fn episode(&mut self, record: &EpisodeRecord, moving_avg: f64) -> Result<(), PpoError>;
    fn update(&mut self, stats: &UpdateStats) -> Result<(), PpoError>;
    fn checkpoint(&mut self, checkpoint: &Checkpoint) -> Result<(), PpoError>;
}

/// Keeps everything in memory.
#[derive(Debug, Default, Clone)]
pub struct MemorySink {
    pub episodes: Vec<(EpisodeRecord, f64)>,
    pub updates: Vec<UpdateStats>,
    pub checkpoints: Vec<Checkpoint>,
}

impl TrainSink for MemorySink {
    fn episode(&mut self, record: &EpisodeRecord, moving_avg: f64) -> Result<(), PpoError> {
        self.episodes.push((*record, moving_avg));
        Ok(())
    }

    fn update(&mut self, stats: &UpdateStats) -> Result<(), PpoError> {
        self.updates.push(*stats);
        Ok(())
    }

    fn checkpoint(&mut self, checkpoint: &Checkpoint) -> Result<(), PpoError> {
        self.checkpoints.push(checkpoint.clone());
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSummary {
    pub updates: u64,
    pub episodes: u64,
    /// Trailing mean return after the last reported episode.
    pub final_moving_avg: Option<f64>,
}

pub struct Trainer<E> {
    pub weights: NetworkWeights,
    pub optimizer: AdamState,
    pub config: PpoConfig,
    runner: Runner<E>,
    updates: u64,
    window: usize,
    recent: VecDeque<f64>,
}

impl<E: Environment> Trainer<E> {
    /// Fresh run: weights come from `derive_seed(master, Init, 0)`.
    pub fn new(
        env: E,
        arch: &ArchConfig,
        config: PpoConfig,
        master_seed: u64,
        window: usize,
    ) -> Result<Self, PpoError> {
        config.validate()?;
        if window == 0 {
            return Err(PpoError::Config(
                "moving-average window must be at least 1".into(),
            ));
        }
        let weights = NetworkWeights::init(arch, derive_seed(master_seed, Stream::Init, 0))?;
        let optimizer = AdamState::new(&weights);
        Ok(Self {
            weights,
            optimizer,
            config,
            runner: Runner::start(env, master_seed, 0)?,
            updates: 0,
            window,
            recent: VecDeque::new(),
        })
    }

    pub fn from_checkpoint(
        env: E,
        checkpoint: Checkpoint,
        config: PpoConfig,
    ) -> Result<Self, PpoError> {
        config.validate()?;
        let state = checkpoint
            .trainer
            .ok_or_else(|| PpoError::Config("checkpoint carries no trainer state".into()))?;
        if state.window == 0 {
            return Err(PpoError::Config("checkpoint window is zero".into()));
        }
        let runner = Runner::resume(
            env,
            state.master_seed,
            state.episode_index,
            state.episode_seed,
            state.episode_return,
            state.episode_steps as usize,
            state.episode_path,
            &state.env_snapshot,
        )?;
        Ok(Self {
            weights: checkpoint.weights,
            optimizer: checkpoint.optimizer,
            config,
            runner,
            updates: checkpoint.updates,
            window: state.window as usize,
            recent: state.recent_returns.into(),
        })
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn episodes_started(&self) -> u64 {
        self.runner.episode_index
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let r = &self.runner;
        Checkpoint {
            weights: self.weights.clone(),
            optimizer: self.optimizer.clone(),
            updates: self.updates,
            trainer: Some(TrainerState {
                master_seed: r.master_seed(),
                episode_index: r.episode_index,
                episode_seed: r.episode_seed,
                episode_steps: r.episode_steps as u64,
                episode_return: r.episode_return,
                episode_path: r.episode_path,
                window: self.window as u64,
                recent_returns: self.recent.iter().copied().collect(),
                env_snapshot: r.env.snapshot(),
            }),
        }
    }

    /// Trains until `total_episodes` episodes have finished. A fresh run
    /// first reports its untrained weights as a checkpoint.
    pub fn run(&mut self, sink: &mut dyn TrainSink) -> Result<TrainSummary, PpoError> {
        if self.updates == 0 {
            sink.checkpoint(&self.checkpoint())?;
        }
        let total = self.config.total_episodes;
        let mut final_moving_avg = None;
        let mut last_saved = self.updates;
        while self.runner.episode_index < total {
            let master = self.runner.master_seed();
            let mut action_rng = rng_for(master, Stream::Action, self.updates);
            let mut rollout = collect_rollout(
                &mut self.runner,
                &self.weights,
                self.config.rollout_horizon,
                &mut action_rng,
            )?;
            for record in rollout.episodes.iter().filter(|r| r.episode_index < total) {
                if self.recent.len() == self.window {
                    self.recent.pop_front();
                }
                self.recent.push_back(record.total_return);
                let avg = trailing_mean(self.recent.make_contiguous(), self.window);
                final_moving_avg = Some(avg);
                sink.episode(record, avg)?;
            }
            rollout.buffer.compute_advantages(
                self.config.gamma,
                self.config.gae_lambda,
                self.config.reward_scale,
            );
            let mut shuffle_rng = rng_for(master, Stream::Shuffle, self.updates);
            let stats = ppo_update(
                &mut self.weights,
                &mut self.optimizer,
                &rollout.buffer,
                &self.config,
                self.updates,
                &mut shuffle_rng,
            )?;
            self.updates += 1;
            sink.update(&stats)?;
            if self.updates.is_multiple_of(self.config.checkpoint_every) {
                sink.checkpoint(&self.checkpoint())?;
                last_saved = self.updates;
            }
        }
        if last_saved != self.updates {
            sink.checkpoint(&self.checkpoint())?;
        }
        Ok(TrainSummary {
            updates: self.updates,
            episodes: self.runner.episode_index.min(total),
            final_moving_avg,
        })
    }
}

/// Builds a fresh [`Trainer`] and runs it to completion.
pub fn train<E: Environment>(
    env: E,
    arch: &ArchConfig,
    config: PpoConfig,
    master_seed: u64,
    window: usize,
    sink: &mut dyn TrainSink,
) -> Result<(Trainer<E>, TrainSummary), PpoError> {
    let mut trainer = Trainer::new(env, arch, config, master_seed, window)?;
    let summary = trainer.run(sink)?;
    Ok((trainer, summary))
}
