use rand::Rng;

use super::buffer::{RolloutBuffer, Transition};
use super::PpoError;
use crate::eval::EpisodeRecord;
use crate::nn::{sample_action, NetworkWeights};
use crate::reward::normalize_depth;
use crate::seed::{derive_seed, Stream};
use crate::world::{AgentPose, EpisodeState, Simulator, WorldError};

#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub collided: bool,
    /// Distance flown this step, meters.
    pub distance: f64,
}

/// An episodic environment with discrete actions over network-ready
/// observations.
pub trait Environment {
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>, PpoError>;
    fn step(&mut self, action: usize) -> Result<EnvStep, PpoError>;
    /// Enough state to resume the current episode through [`Self::restore`].
    fn snapshot(&self) -> Vec<f64>;
    fn restore(&mut self, seed: u64, snapshot: &[f64]) -> Result<Vec<f64>, PpoError>;
}

impl Environment for Simulator {
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>, PpoError> {
        Ok(normalize_depth(&Simulator::reset(self, seed)?).values)
    }

    fn step(&mut self, action: usize) -> Result<EnvStep, PpoError> {
        let out = Simulator::step(self, action)?;
        Ok(EnvStep {
            observation: normalize_depth(&out.observation).values,
            reward: out.reward,
            done: out.done,
            collided: out.info.collided,
            distance: out.info.distance,
        })
    }

    /// `[x, y, z, yaw, steps, path_length]`
    fn snapshot(&self) -> Vec<f64> {
        self.state()
            .map(|s| {
                vec![
                    s.pose.position[0],
                    s.pose.position[1],
                    s.pose.position[2],
                    s.pose.yaw,
                    s.steps as f64,
                    s.path_length,
                ]
            })
            .unwrap_or_default()
    }

    fn restore(&mut self, seed: u64, snapshot: &[f64]) -> Result<Vec<f64>, PpoError> {
        let &[x, y, z, yaw, steps, path_length] = snapshot else {
            return Err(PpoError::World(WorldError::NotStarted));
        };
        let frame = Simulator::restore(
            self,
            EpisodeState {
                pose: AgentPose {
                    position: [x, y, z],
                    yaw,
                },
                steps: steps as usize,
                path_length,
                done: false,
                collided: false,
                seed,
            },
        )?;
        Ok(normalize_depth(&frame).values)
    }
}

/// Drives one environment across episode boundaries. Episode `i` spawns
/// with seed `derive_seed(master, Spawn, i)`.
#[derive(Debug, Clone)]
pub struct Runner<E> {
    pub env: E,
    master_seed: u64,
    obs: Vec<f64>,
    pub episode_index: u64,
    pub episode_seed: u64,
    pub episode_return: f64,
    pub episode_steps: usize,
    pub episode_path: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub buffer: RolloutBuffer,
    /// Episodes that finished during this rollout, in order.
    pub episodes: Vec<EpisodeRecord>,
}

impl<E: Environment> Runner<E> {
    pub fn start(mut env: E, master_seed: u64, episode_index: u64) -> Result<Self, PpoError> {
        let seed = derive_seed(master_seed, Stream::Spawn, episode_index);
        let obs = env.reset(seed)?;
        Ok(Self {
            env,
            master_seed,
            obs,
            episode_index,
            episode_seed: seed,
            episode_return: 0.0,
            episode_steps: 0,
            episode_path: 0.0,
        })
    }

    /// Rebuilds a runner in the middle of an episode.
    #[allow(clippy::too_many_arguments)]
    pub fn resume(
        mut env: E,
        master_seed: u64,
        episode_index: u64,
        episode_seed: u64,
        episode_return: f64,
        episode_steps: usize,
        episode_path: f64,
        snapshot: &[f64],
    ) -> Result<Self, PpoError> {
        let obs = env.restore(episode_seed, snapshot)?;
        Ok(Self {
            env,
            master_seed,
            obs,
            episode_index,
            episode_seed,
            episode_return,
            episode_steps,
            episode_path,
        })
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn observation(&self) -> &[f64] {
        &self.obs
    }
}

/// Collects exactly `horizon` transitions with actions sampled from the
/// current policy.
pub fn collect_rollout<E: Environment, R: Rng + ?Sized>(
    runner: &mut Runner<E>,
    weights: &NetworkWeights,
    horizon: usize,
    rng: &mut R,
) -> Result<Rollout, PpoError> {
    let mut transitions = Vec::with_capacity(horizon);
    let mut episodes = Vec::new();
    for _ in 0..horizon {
        let (out, _) = weights.forward(&runner.obs)?;
        let action = sample_action(&out.probs, rng);
        let step = runner.env.step(action)?;
        let observation = std::mem::replace(&mut runner.obs, step.observation);
        transitions.push(Transition {
            observation,
            action,
            log_prob_old: out.log_probs[action],
            reward: step.reward,
            value_old: out.value,
            done: step.done,
            timestep: runner.episode_steps,
        });
        runner.episode_return += step.reward;
        runner.episode_steps += 1;
        runner.episode_path += step.distance;
        if step.done {
            episodes.push(EpisodeRecord {
                episode_index: runner.episode_index,
                path_length: runner.episode_path,
                steps: runner.episode_steps,
                collided: step.collided,
                total_return: runner.episode_return,
                seed: runner.episode_seed,
            });
            runner.episode_index += 1;
            runner.episode_seed =
                derive_seed(runner.master_seed, Stream::Spawn, runner.episode_index);
            runner.episode_return = 0.0;
            runner.episode_steps = 0;
            runner.episode_path = 0.0;
            runner.obs = runner.env.reset(runner.episode_seed)?;
        }
    }
    let bootstrap_value = match transitions.last() {
        Some(t) if !t.done => weights.forward(&runner.obs)?.0.value,
        _ => 0.0,
    };
    Ok(Rollout {
        buffer: RolloutBuffer {
            transitions,
            bootstrap_value,
            returns: Vec::new(),
            advantages: Vec::new(),
        },
        episodes,
    })
}
