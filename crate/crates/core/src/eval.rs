//! Policy evaluation: Mean Safe Flight, moving-average returns and baseline
//! comparisons.
//!
//! Mean Safe Flight (MSF) is the average distance flown per episode. Episodes
//! that hit the step horizon without colliding contribute their full path
//! length.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::nn::{ActionMode, NetworkWeights, NnError};
use crate::reward::normalize_depth;
use crate::seed::{derive_seed, Stream};
use crate::world::{SimConfig, Simulator, WorldError, WorldMap, FORWARD_ACTION, NUM_ACTIONS};

pub const DEFAULT_WINDOW: usize = 50;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("no episode records")]
    Empty,
    #[error("moving-average window must be at least 1")]
    ZeroWindow,
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub episode_index: u64,
    pub path_length: f64,
    pub steps: usize,
    pub collided: bool,
    pub total_return: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub window: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafeFlight {
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    /// Uniformly random cell of the action grid.
    Random,
    /// Always the centre cell: level flight straight ahead.
    Straight,
}

impl std::str::FromStr for Baseline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Self::Random),
            "straight" => Ok(Self::Straight),
            other => Err(format!(
                "unknown baseline `{other}` (expected random|straight)"
            )),
        }
    }
}

impl std::fmt::Display for Baseline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Baseline::Random => "random",
            Baseline::Straight => "straight",
        })
    }
}

/// Something that picks actions from normalized depth frames.
#[derive(Debug, Clone, Copy)]
pub enum Pilot<'a> {
    Network {
        weights: &'a NetworkWeights,
        mode: ActionMode,
    },
    Baseline(Baseline),
}

impl Pilot<'_> {
    fn act(&self, obs: &[f64], rng: &mut ChaCha8Rng) -> Result<usize, EvalError> {
        Ok(match *self {
            Pilot::Network { weights, mode } => {
                let (out, _) = weights.forward(obs)?;
                mode.select(&out.probs, rng)
            }
            Pilot::Baseline(Baseline::Random) => rng.gen_range(0..NUM_ACTIONS),
            Pilot::Baseline(Baseline::Straight) => FORWARD_ACTION,
        })
    }
}

/// One row of a per-step trajectory export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub episode: u64,
    pub t: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    pub action: usize,
    pub reward: f64,
}

/// Flies `n_episodes` episodes; episode `i` spawns with seed `base_seed + i`
/// and runs until collision or the step horizon.
pub fn run_episodes(
    map: &WorldMap,
    sim_config: &SimConfig,
    pilot: Pilot<'_>,
    n_episodes: usize,
    base_seed: u64,
    mut trajectory: Option<&mut Vec<TrajectoryPoint>>,
) -> Result<Vec<EpisodeRecord>, EvalError> {
    let mut sim = Simulator::new(map.clone(), *sim_config)?;
    let mut records = Vec::with_capacity(n_episodes);
    for i in 0..n_episodes as u64 {
        let seed = base_seed.wrapping_add(i);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, Stream::Baseline, 0));
        let mut obs = normalize_depth(&sim.reset(seed)?).values;
        let mut total_return = 0.0;
        loop {
            let action = pilot.act(&obs, &mut rng)?;
            let out = sim.step(action)?;
            total_return += out.reward;
            if let Some(traj) = trajectory.as_deref_mut() {
                let pose = sim.state().map(|s| s.pose).expect("episode in progress");
                traj.push(TrajectoryPoint {
                    episode: i,
                    t: out.info.steps - 1,
                    x: pose.position[0],
                    y: pose.position[1],
                    z: pose.position[2],
                    yaw: pose.yaw,
                    action,
                    reward: out.reward,
                });
            }
            if out.done {
                records.push(EpisodeRecord {
                    episode_index: i,
                    path_length: out.info.path_length,
                    steps: out.info.steps,
                    collided: out.info.collided,
                    total_return,
                    seed,
                });
                break;
            }
            obs = normalize_depth(&out.observation).values;
        }
    }
    Ok(records)
}

pub fn run_eval(
    map: &WorldMap,
    sim_config: &SimConfig,
    weights: &NetworkWeights,
    n_episodes: usize,
    base_seed: u64,
    mode: ActionMode,
) -> Result<Vec<EpisodeRecord>, EvalError> {
    run_episodes(
        map,
        sim_config,
        Pilot::Network { weights, mode },
        n_episodes,
        base_seed,
        None,
    )
}

pub fn mean_safe_flight(records: &[EpisodeRecord]) -> Result<SafeFlight, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let sum: f64 = records.iter().map(|r| r.path_length).sum();
    let max = records
        .iter()
        .map(|r| r.path_length)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SafeFlight {
        mean: sum / records.len() as f64,
        max,
    })
}

/// Mean of the latest `window` values, or of all values seen so far while
/// fewer than `window` exist.
pub fn trailing_mean(values: &[f64], window: usize) -> f64 {
    let tail = &values[values.len().saturating_sub(window)..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

pub fn moving_average(returns: &[f64], window: usize) -> Result<MetricSeries, EvalError> {
    if window == 0 {
        return Err(EvalError::ZeroWindow);
    }
    let values = (1..=returns.len())
        .map(|k| trailing_mean(&returns[..k], window))
        .collect();
    Ok(MetricSeries { window, values })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub baseline: Baseline,
    pub trained: SafeFlight,
    pub reference: SafeFlight,
    /// Trained MSF mean over baseline MSF mean.
    pub ratio: f64,
}

/// Evaluates the trained policy and a baseline on the same spawn seeds.
pub fn compare_policies(
    map: &WorldMap,
    sim_config: &SimConfig,
    weights: &NetworkWeights,
    mode: ActionMode,
    baseline: Baseline,
    n_episodes: usize,
    seed: u64,
) -> Result<Comparison, EvalError> {
    let trained = mean_safe_flight(&run_eval(map, sim_config, weights, n_episodes, seed, mode)?)?;
    let reference = mean_safe_flight(&run_episodes(
        map,
        sim_config,
        Pilot::Baseline(baseline),
        n_episodes,
        seed,
        None,
    )?)?;
    Ok(Comparison {
        baseline,
        trained,
        reference,
        ratio: trained.mean / reference.mean,
    })
}
