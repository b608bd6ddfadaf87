//! World maps and the plain-text map file format.
//!
//! ```text
//! # comment
//! bounds = x0 y0 z0 x1 y1 z1
//! obstacle = x0 y0 z0 x1 y1 z1        (repeatable)
//! spawn = x y z yaw                   (repeatable, fixed pose)
//! spawn_region = x0 y0 z0 x1 y1 z1 [yaw_lo yaw_hi]   (repeatable)
//! max_range = 20.0
//! ```
//!
//! All values are decimal SI units (meters, radians). A region without a
//! yaw interval draws yaw uniformly from [−π, π).

use std::f64::consts::PI;
use std::path::Path;

use super::geometry::{Aabb, Vec3};
use super::WorldError;

pub const DEFAULT_MAX_RANGE: f64 = 20.0;

/// The acceptance corridor: 20 m × 4 m × 3 m with six pillars.
pub const BUILTIN_CORRIDOR: &str = include_str!("../../maps/corridor.map");

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpawnYaw {
    Fixed(f64),
    Uniform(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpawnRegion {
    pub min: Vec3,
    pub max: Vec3,
    pub yaw: SpawnYaw,
}

impl SpawnRegion {
    pub fn point(position: Vec3, yaw: f64) -> Self {
        Self {
            min: position,
            max: position,
            yaw: SpawnYaw::Fixed(yaw),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldMap {
    pub bounds: Aabb,
    pub obstacles: Vec<Aabb>,
    pub max_range: f64,
    /// Empty means "anywhere inside bounds, any heading".
    pub spawns: Vec<SpawnRegion>,
}

impl WorldMap {
    pub fn new(bounds: Aabb, obstacles: Vec<Aabb>, max_range: f64) -> Result<Self, WorldError> {
        let map = Self {
            bounds,
            obstacles,
            max_range,
            spawns: Vec::new(),
        };
        map.validate()?;
        Ok(map)
    }

    pub fn with_spawns(mut self, spawns: Vec<SpawnRegion>) -> Result<Self, WorldError> {
        self.spawns = spawns;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        if !self.bounds.has_positive_extent() {
            return Err(WorldError::InvalidMap(
                "bounds must have positive extent".into(),
            ));
        }
        if !(self.max_range.is_finite() && self.max_range > 0.0) {
            return Err(WorldError::InvalidMap(format!(
                "max_range must be positive, got {}",
                self.max_range
            )));
        }
        for (i, b) in self.obstacles.iter().enumerate() {
            if !b.has_positive_extent() {
                return Err(WorldError::InvalidMap(format!(
                    "obstacle {i} must have positive extent"
                )));
            }
            if !self.bounds.contains_box(b) {
                return Err(WorldError::InvalidMap(format!(
                    "obstacle {i} lies outside bounds"
                )));
            }
        }
        for (i, s) in self.spawns.iter().enumerate() {
            let region = Aabb::new(s.min, s.max);
            if (0..3).any(|k| s.min[k] > s.max[k]) || !self.bounds.contains_box(&region) {
                return Err(WorldError::InvalidMap(format!(
                    "spawn {i} lies outside bounds"
                )));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, WorldError> {
        let mut bounds = None;
        let mut obstacles = Vec::new();
        let mut spawns = Vec::new();
        let mut max_range = DEFAULT_MAX_RANGE;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| WorldError::MapSyntax {
                line: lineno + 1,
                message: msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let nums = value
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| err(format!("`{t}` is not a finite number")))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            let want = |n: &[usize]| {
                if n.contains(&nums.len()) {
                    Ok(())
                } else {
                    Err(err(format!(
                        "`{key}` takes {n:?} numbers, got {}",
                        nums.len()
                    )))
                }
            };
            match key {
                "bounds" => {
                    want(&[6])?;
                    if bounds.is_some() {
                        return Err(err("duplicate `bounds`".into()));
                    }
                    bounds = Some(boxed(&nums));
                }
                "obstacle" => {
                    want(&[6])?;
                    obstacles.push(boxed(&nums));
                }
                "spawn" => {
                    want(&[4])?;
                    spawns.push(SpawnRegion::point([nums[0], nums[1], nums[2]], nums[3]));
                }
                "spawn_region" => {
                    want(&[6, 8])?;
                    let b = boxed(&nums);
                    let yaw = if nums.len() == 8 {
                        SpawnYaw::Uniform(nums[6], nums[7])
                    } else {
                        SpawnYaw::Uniform(-PI, PI)
                    };
                    spawns.push(SpawnRegion {
                        min: b.min,
                        max: b.max,
                        yaw,
                    });
                }
                "max_range" => {
                    want(&[1])?;
                    max_range = nums[0];
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        let bounds = bounds.ok_or_else(|| WorldError::InvalidMap("missing `bounds`".into()))?;
        let map = Self {
            bounds,
            obstacles,
            max_range,
            spawns,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self, WorldError> {
        let text = std::fs::read_to_string(path).map_err(|e| WorldError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }
}

fn boxed(n: &[f64]) -> Aabb {
    Aabb::new([n[0], n[1], n[2]], [n[3], n[4], n[5]])
}
