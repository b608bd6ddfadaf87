use rand_distr::{Distribution, Normal};

use super::{
    apply_action, check_collision, render_depth, spawn, ActionCommand, ActionGrid, AgentPose,
    CameraModel, WorldError, WorldMap, DEFAULT_COLLISION_RADIUS, DEFAULT_MAX_STEPS,
};
use crate::depth::DepthImage;
use crate::reward::{RewardConfig, COLLISION_REWARD};
use crate::seed::{rng_for, Stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub camera: CameraModel,
    pub actions: ActionGrid,
    pub collision_radius: f64,
    pub max_steps: usize,
    pub reward: RewardConfig,
    /// Standard deviation of additive Gaussian depth noise, meters. Off at 0.
    pub depth_noise_std: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            camera: CameraModel::default(),
            actions: ActionGrid::default(),
            collision_radius: DEFAULT_COLLISION_RADIUS,
            max_steps: DEFAULT_MAX_STEPS,
            reward: RewardConfig::default(),
            depth_noise_std: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeState {
    pub pose: AgentPose,
    pub steps: usize,
    pub path_length: f64,
    pub done: bool,
    pub collided: bool,
    /// Seed the episode was reset with; keys the noise stream.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// Horizontal distance flown this step.
    pub distance: f64,
    pub collided: bool,
    pub steps: usize,
    pub path_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: DepthImage,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// One MAV in one world. Instances share nothing and can live on separate
/// threads.
#[derive(Debug, Clone)]
pub struct Simulator {
    map: WorldMap,
    config: SimConfig,
    state: Option<EpisodeState>,
}

impl Simulator {
    pub fn new(map: WorldMap, config: SimConfig) -> Result<Self, WorldError> {
        map.validate()?;
        config.camera.validate()?;
        config
            .reward
            .validate()
            .map_err(|e| WorldError::InvalidMap(e.to_string()))?;
        Ok(Self {
            map,
            config,
            state: None,
        })
    }

    pub fn map(&self) -> &WorldMap {
        &self.map
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn state(&self) -> Option<&EpisodeState> {
        self.state.as_ref()
    }

    /// Starts an episode at a pose drawn from the map's spawn regions.
    pub fn reset(&mut self, seed: u64) -> Result<DepthImage, WorldError> {
        let pose = spawn(&self.map, seed, self.config.collision_radius)?;
        self.reset_to(pose, seed)
    }

    pub fn reset_to(&mut self, pose: AgentPose, seed: u64) -> Result<DepthImage, WorldError> {
        self.restore(EpisodeState {
            pose,
            steps: 0,
            path_length: 0.0,
            done: false,
            collided: false,
            seed,
        })
    }

    /// Reinstates a saved episode state and returns its current frame.
    pub fn restore(&mut self, state: EpisodeState) -> Result<DepthImage, WorldError> {
        if !self.map.bounds.contains_point(state.pose.position) {
            return Err(WorldError::InvalidPose(state.pose.position));
        }
        let frame = self.observe(&state)?;
        self.state = Some(state);
        Ok(frame)
    }

    pub fn step(&mut self, action: usize) -> Result<StepOutcome, WorldError> {
        let cmd = ActionCommand::new(action, &self.config.actions)?;
        let mut state = self.state.ok_or(WorldError::NotStarted)?;
        if state.done {
            return Err(WorldError::EpisodeFinished);
        }
        state.pose = apply_action(&state.pose, &cmd, &self.map.bounds);
        state.steps += 1;
        state.path_length += cmd.forward_step;
        state.collided = check_collision(&state.pose, &self.map, self.config.collision_radius);
        state.done = state.collided || state.steps >= self.config.max_steps;

        let observation = self.observe(&state)?;
        let reward = if state.collided {
            COLLISION_REWARD
        } else {
            self.config
                .reward
                .frame_reward(&observation)
                .map_err(|e| WorldError::InvalidMap(e.to_string()))?
                .value
        };
        self.state = Some(state);
        Ok(StepOutcome {
            observation,
            reward,
            done: state.done,
            info: StepInfo {
                distance: cmd.forward_step,
                collided: state.collided,
                steps: state.steps,
                path_length: state.path_length,
            },
        })
    }

    /// Renders the frame seen from `state`. A pose that left the room on a
    /// colliding step is pulled back onto the walls first.
    fn observe(&self, state: &EpisodeState) -> Result<DepthImage, WorldError> {
        let b = &self.map.bounds;
        let mut pose = state.pose;
        for i in 0..3 {
            pose.position[i] = pose.position[i].clamp(b.min[i], b.max[i]);
        }
        let mut frame = render_depth(&pose, &self.map, &self.config.camera)?;
        if self.config.depth_noise_std > 0.0 {
            let noise = Normal::new(0.0, self.config.depth_noise_std)
                .map_err(|e| WorldError::InvalidMap(e.to_string()))?;
            let mut rng = rng_for(state.seed, Stream::Noise, state.steps as u64);
            let cap = frame.max_range;
            for v in frame.values.iter_mut() {
                *v = (*v + noise.sample(&mut rng)).clamp(0.0, cap);
            }
        }
        Ok(frame)
    }
}
