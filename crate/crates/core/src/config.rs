//! Run configuration: flat `key = value` lines with `#` comments and dotted
//! section prefixes. Every key is optional; [`RunConfig::emit`] writes every
//! effective value so a snapshot reloads to an identical config.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::nn::{ActionMode, ArchConfig};
use crate::ppo::PpoConfig;
use crate::reward::RewardConfig;
use crate::world::{ActionGrid, CameraModel, SimConfig, WorldMap};

/// `map_path` value selecting the bundled corridor map.
pub const BUILTIN_MAP: &str = "builtin:corridor";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` given twice (first on line {first})")]
    Duplicate {
        line: usize,
        first: usize,
        key: String,
    },
    #[error("line {line}: `{key}`: {message}")]
    Value {
        line: usize,
        key: String,
        message: String,
    },
    #[error("{}`{key}`: {message}", .line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Range {
        key: String,
        line: Option<usize>,
        message: String,
    },
    #[error("map file not found: {path}")]
    MissingMap { path: String },
    #[error("map {path}: {message}")]
    Map { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub map_path: String,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub camera_width: usize,
    pub camera_height: usize,
    pub horizontal_fov_deg: f64,
    pub vertical_fov_deg: f64,
    pub forward_step: f64,
    pub yaw_step_deg: f64,
    pub climb_step: f64,
    pub collision_radius: f64,
    pub max_steps: usize,
    pub depth_noise_std: f64,
    pub tau: f64,
    pub d_min: f64,
    pub network: ArchConfig,
    pub ppo: PpoConfig,
    pub eval_episodes: usize,
    pub eval_window: usize,
    pub eval_mode: ActionMode,
    pub eval_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let camera = CameraModel::default();
        let actions = ActionGrid::default();
        let sim = SimConfig::default();
        let reward = RewardConfig::default();
        Self {
            map_path: BUILTIN_MAP.into(),
            master_seed: 0,
            output_dir: PathBuf::from("dppo_output"),
            camera_width: camera.width,
            camera_height: camera.height,
            horizontal_fov_deg: camera.horizontal_fov.to_degrees(),
            vertical_fov_deg: camera.vertical_fov.to_degrees(),
            forward_step: actions.forward_step,
            yaw_step_deg: 15.0,
            climb_step: actions.climb_step,
            collision_radius: sim.collision_radius,
            max_steps: sim.max_steps,
            depth_noise_std: sim.depth_noise_std,
            tau: reward.tau,
            d_min: reward.d_min,
            network: ArchConfig::full(),
            ppo: PpoConfig::default(),
            eval_episodes: 10,
            eval_window: crate::eval::DEFAULT_WINDOW,
            eval_mode: ActionMode::Argmax,
            eval_seed: 1_000_000,
        }
    }
}

const KEYS: &[&str] = &[
    "map_path",
    "master_seed",
    "output_dir",
    "camera.width",
    "camera.height",
    "camera.horizontal_fov_deg",
    "camera.vertical_fov_deg",
    "action.forward_step",
    "action.yaw_step_deg",
    "action.climb_step",
    "sim.collision_radius",
    "sim.max_steps",
    "sim.depth_noise_std",
    "reward.tau",
    "reward.d_min",
    "network.input_size",
    "network.filters",
    "network.kernels",
    "network.dense",
    "ppo.gamma",
    "ppo.gae_lambda",
    "ppo.clip_epsilon",
    "ppo.learning_rate",
    "ppo.epochs_per_update",
    "ppo.minibatch_size",
    "ppo.rollout_horizon",
    "ppo.value_coef",
    "ppo.entropy_coef",
    "ppo.total_episodes",
    "ppo.reward_scale",
    "ppo.checkpoint_every",
    "eval.n_episodes",
    "eval.window",
    "eval.mode",
    "eval.seed",
];

fn parse_value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: Display,
{
    raw.parse().map_err(|e: T::Err| ConfigError::Value {
        line,
        key: key.into(),
        message: format!("cannot parse `{raw}`: {e}"),
    })
}

fn parse_list(line: usize, key: &str, raw: &str) -> Result<Vec<usize>, ConfigError> {
    raw.split(',')
        .map(|s| parse_value(line, key, s.trim()))
        .collect()
}

fn join(values: impl IntoIterator<Item = usize>) -> String {
    values
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Relative paths inside the file resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let dir = path.parent().unwrap_or(Path::new(""));
        let base = if dir.is_absolute() {
            dir.to_path_buf()
        } else {
            std::env::current_dir()
                .map_err(|e| ConfigError::Io {
                    path: ".".into(),
                    message: e.to_string(),
                })?
                .join(dir)
        };
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.output_dir = base_dir.join(&cfg.output_dir);
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut lists = (None, None);
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("expected `key = value`, found `{content}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.into(),
                });
            }
            if let Some(&first) = seen.get(key) {
                return Err(ConfigError::Duplicate {
                    line,
                    first,
                    key: key.into(),
                });
            }
            seen.insert(key.into(), line);
            if value.is_empty() {
                return Err(ConfigError::Value {
                    line,
                    key: key.into(),
                    message: "missing value".into(),
                });
            }
            cfg.set(line, key, value, base_dir, &mut lists)?;
        }
        if lists.0.is_some() || lists.1.is_some() {
            let filters = lists
                .0
                .unwrap_or_else(|| cfg.network.conv.iter().map(|c| c.filters).collect());
            let kernels = lists
                .1
                .unwrap_or_else(|| cfg.network.conv.iter().map(|c| c.kernel).collect());
            if filters.len() != kernels.len() {
                let key = if seen.contains_key("network.kernels") {
                    "network.kernels"
                } else {
                    "network.filters"
                };
                return Err(ConfigError::Range {
                    key: key.into(),
                    line: seen.get(key).copied(),
                    message: format!(
                        "{} filter counts but {} kernel sizes",
                        filters.len(),
                        kernels.len()
                    ),
                });
            }
            cfg.network = ArchConfig::from_lists(
                cfg.network.input_size,
                &filters,
                &kernels,
                &cfg.network.dense,
            );
        }
        cfg.validate_at(&seen)?;
        Ok(cfg)
    }

    fn set(
        &mut self,
        line: usize,
        key: &str,
        v: &str,
        base: &Path,
        lists: &mut (Option<Vec<usize>>, Option<Vec<usize>>),
    ) -> Result<(), ConfigError> {
        let p = &mut self.ppo;
        match key {
            "map_path" => {
                self.map_path = if v == BUILTIN_MAP {
                    v.into()
                } else {
                    resolve(base, v).display().to_string()
                }
            }
            "master_seed" => self.master_seed = parse_value(line, key, v)?,
            "output_dir" => self.output_dir = resolve(base, v),
            "camera.width" => self.camera_width = parse_value(line, key, v)?,
            "camera.height" => self.camera_height = parse_value(line, key, v)?,
            "camera.horizontal_fov_deg" => self.horizontal_fov_deg = parse_value(line, key, v)?,
            "camera.vertical_fov_deg" => self.vertical_fov_deg = parse_value(line, key, v)?,
            "action.forward_step" => self.forward_step = parse_value(line, key, v)?,
            "action.yaw_step_deg" => self.yaw_step_deg = parse_value(line, key, v)?,
            "action.climb_step" => self.climb_step = parse_value(line, key, v)?,
            "sim.collision_radius" => self.collision_radius = parse_value(line, key, v)?,
            "sim.max_steps" => self.max_steps = parse_value(line, key, v)?,
            "sim.depth_noise_std" => self.depth_noise_std = parse_value(line, key, v)?,
            "reward.tau" => self.tau = parse_value(line, key, v)?,
            "reward.d_min" => self.d_min = parse_value(line, key, v)?,
            "network.input_size" => self.network.input_size = parse_value(line, key, v)?,
            "network.filters" => lists.0 = Some(parse_list(line, key, v)?),
            "network.kernels" => lists.1 = Some(parse_list(line, key, v)?),
            "network.dense" => self.network.dense = parse_list(line, key, v)?,
            "ppo.gamma" => p.gamma = parse_value(line, key, v)?,
            "ppo.gae_lambda" => p.gae_lambda = parse_value(line, key, v)?,
            "ppo.clip_epsilon" => p.clip_epsilon = parse_value(line, key, v)?,
            "ppo.learning_rate" => p.learning_rate = parse_value(line, key, v)?,
            "ppo.epochs_per_update" => p.epochs_per_update = parse_value(line, key, v)?,
            "ppo.minibatch_size" => p.minibatch_size = parse_value(line, key, v)?,
            "ppo.rollout_horizon" => p.rollout_horizon = parse_value(line, key, v)?,
            "ppo.value_coef" => p.value_coef = parse_value(line, key, v)?,
            "ppo.entropy_coef" => p.entropy_coef = parse_value(line, key, v)?,
            "ppo.total_episodes" => p.total_episodes = parse_value(line, key, v)?,
            "ppo.reward_scale" => p.reward_scale = parse_value(line, key, v)?,
            "ppo.checkpoint_every" => p.checkpoint_every = parse_value(line, key, v)?,
            "eval.n_episodes" => self.eval_episodes = parse_value(line, key, v)?,
            "eval.window" => self.eval_window = parse_value(line, key, v)?,
            "eval.mode" => self.eval_mode = parse_value(line, key, v)?,
            "eval.seed" => self.eval_seed = parse_value(line, key, v)?,
            _ => unreachable!("key list and setter disagree on `{key}`"),
        }
        Ok(())
    }

    /// Every key with its effective value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let p = &self.ppo;
        let n = &self.network;
        let values = vec![
            self.map_path.clone(),
            self.master_seed.to_string(),
            self.output_dir.display().to_string(),
            self.camera_width.to_string(),
            self.camera_height.to_string(),
            self.horizontal_fov_deg.to_string(),
            self.vertical_fov_deg.to_string(),
            self.forward_step.to_string(),
            self.yaw_step_deg.to_string(),
            self.climb_step.to_string(),
            self.collision_radius.to_string(),
            self.max_steps.to_string(),
            self.depth_noise_std.to_string(),
            self.tau.to_string(),
            self.d_min.to_string(),
            n.input_size.to_string(),
            join(n.conv.iter().map(|c| c.filters)),
            join(n.conv.iter().map(|c| c.kernel)),
            join(n.dense.iter().copied()),
            p.gamma.to_string(),
            p.gae_lambda.to_string(),
            p.clip_epsilon.to_string(),
            p.learning_rate.to_string(),
            p.epochs_per_update.to_string(),
            p.minibatch_size.to_string(),
            p.rollout_horizon.to_string(),
            p.value_coef.to_string(),
            p.entropy_coef.to_string(),
            p.total_episodes.to_string(),
            p.reward_scale.to_string(),
            p.checkpoint_every.to_string(),
            self.eval_episodes.to_string(),
            self.eval_window.to_string(),
            self.eval_mode.to_string(),
            self.eval_seed.to_string(),
        ];
        KEYS.iter().copied().zip(values).collect()
    }

    /// Resolved snapshot in the input format.
    pub fn emit(&self) -> String {
        let mut out = String::from("# resolved configuration\n");
        for (k, v) in self.entries() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_at(&HashMap::new())
    }

    fn validate_at(&self, lines: &HashMap<String, usize>) -> Result<(), ConfigError> {
        let range = |key: &str, message: String| ConfigError::Range {
            key: key.into(),
            line: lines.get(key).copied(),
            message,
        };
        let check = |key: &str, ok: bool, what: &str| -> Result<(), ConfigError> {
            if ok {
                Ok(())
            } else {
                Err(range(key, format!("must be {what}")))
            }
        };
        let positive = |x: f64| x.is_finite() && x > 0.0;
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        let p = &self.ppo;
        check("camera.width", self.camera_width >= 2, "at least 2")?;
        check("camera.height", self.camera_height >= 2, "at least 2")?;
        let fov = |x: f64| x > 0.0 && x < 180.0;
        check(
            "camera.horizontal_fov_deg",
            fov(self.horizontal_fov_deg),
            "in (0, 180)",
        )?;
        check(
            "camera.vertical_fov_deg",
            fov(self.vertical_fov_deg),
            "in (0, 180)",
        )?;
        check(
            "action.forward_step",
            positive(self.forward_step),
            "positive",
        )?;
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        check(
            "action.yaw_step_deg",
            nonneg(self.yaw_step_deg),
            "finite and non-negative",
        )?;
        check(
            "action.climb_step",
            nonneg(self.climb_step),
            "finite and non-negative",
        )?;
        check(
            "sim.collision_radius",
            positive(self.collision_radius),
            "positive",
        )?;
        check("sim.max_steps", self.max_steps >= 1, "at least 1")?;
        check(
            "sim.depth_noise_std",
            nonneg(self.depth_noise_std),
            "finite and non-negative",
        )?;
        check("reward.tau", unit(self.tau), "in (0, 1]")?;
        check("reward.d_min", positive(self.d_min), "positive")?;
        check("ppo.gamma", unit(p.gamma), "in (0, 1]")?;
        check("ppo.gae_lambda", unit(p.gae_lambda), "in (0, 1]")?;
        check(
            "ppo.clip_epsilon",
            p.clip_epsilon > 0.0 && p.clip_epsilon < 1.0,
            "in (0, 1)",
        )?;
        check("ppo.learning_rate", positive(p.learning_rate), "positive")?;
        check(
            "ppo.epochs_per_update",
            p.epochs_per_update >= 1,
            "at least 1",
        )?;
        check("ppo.minibatch_size", p.minibatch_size >= 1, "at least 1")?;
        check("ppo.rollout_horizon", p.rollout_horizon >= 1, "at least 1")?;
        check(
            "ppo.value_coef",
            nonneg(p.value_coef),
            "finite and non-negative",
        )?;
        check(
            "ppo.entropy_coef",
            nonneg(p.entropy_coef),
            "finite and non-negative",
        )?;
        check("ppo.reward_scale", positive(p.reward_scale), "positive")?;
        check(
            "ppo.checkpoint_every",
            p.checkpoint_every >= 1,
            "at least 1",
        )?;
        check("eval.n_episodes", self.eval_episodes >= 1, "at least 1")?;
        check("eval.window", self.eval_window >= 1, "at least 1")?;

        let n = &self.network;
        if let Err(e) = n.validate() {
            return Err(range("network.input_size", e.to_string()));
        }
        for key in ["camera.width", "camera.height"] {
            let side = if key == "camera.width" {
                self.camera_width
            } else {
                self.camera_height
            };
            if side != n.input_size {
                return Err(range(
                    key,
                    format!("{side} does not match network.input_size {}", n.input_size),
                ));
            }
        }
        if let Err(e) = p.validate() {
            return Err(range("ppo", e.to_string()));
        }
        self.load_map()?;
        Ok(())
    }

    pub fn load_map(&self) -> Result<WorldMap, ConfigError> {
        if self.map_path == BUILTIN_MAP {
            return WorldMap::parse(crate::world::BUILTIN_CORRIDOR).map_err(|e| ConfigError::Map {
                path: self.map_path.clone(),
                message: e.to_string(),
            });
        }
        let path = Path::new(&self.map_path);
        if !path.is_file() {
            return Err(ConfigError::MissingMap {
                path: self.map_path.clone(),
            });
        }
        WorldMap::load(path).map_err(|e| ConfigError::Map {
            path: self.map_path.clone(),
            message: e.to_string(),
        })
    }

    pub fn camera(&self) -> CameraModel {
        CameraModel {
            width: self.camera_width,
            height: self.camera_height,
            horizontal_fov: self.horizontal_fov_deg.to_radians(),
            vertical_fov: self.vertical_fov_deg.to_radians(),
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            camera: self.camera(),
            actions: ActionGrid {
                forward_step: self.forward_step,
                yaw_step: self.yaw_step_deg.to_radians(),
                climb_step: self.climb_step,
            },
            collision_radius: self.collision_radius,
            max_steps: self.max_steps,
            reward: RewardConfig {
                tau: self.tau,
                d_min: self.d_min,
            },
            depth_noise_std: self.depth_noise_std,
        }
    }
}
