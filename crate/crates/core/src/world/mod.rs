//! Deterministic indoor-world simulator.
//!
//! Worlds are axis-aligned boxes inside an axis-aligned room. The MAV moves on
//! a 7×7 action grid (columns are yaw bins, rows are climb bins, every action
//! also flies a fixed forward step), observes a pinhole depth image rendered
//! by exact ray–box intersection, and collides when a sphere around it
//! touches an obstacle or the room walls.
//!
//! Frames: `x`, `y` horizontal, `z` up. Yaw is measured counterclockwise
//! from `+x`. Image columns increase toward positive yaw and rows increase
//! downward, so pixel `(u, v)` and action cell `(col, row)` describe the same
//! direction in the frustum.

mod geometry;
mod map;
mod sim;

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;

pub use geometry::{Aabb, Vec3};
pub use map::{SpawnRegion, SpawnYaw, WorldMap, BUILTIN_CORRIDOR, DEFAULT_MAX_RANGE};
pub use sim::{EpisodeState, SimConfig, Simulator, StepInfo, StepOutcome};

use crate::depth::DepthImage;

pub const GRID_SIDE: usize = 7;
pub const NUM_ACTIONS: usize = GRID_SIDE * GRID_SIDE;
/// Index of the centre cell: straight ahead, level.
pub const FORWARD_ACTION: usize = 24;
pub const DEFAULT_COLLISION_RADIUS: f64 = 0.20;
pub const DEFAULT_MAX_STEPS: usize = 500;
const SPAWN_ATTEMPTS: usize = 1000;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum WorldError {
    #[error("pose {0:?} is outside the world bounds")]
    InvalidPose(Vec3),
    #[error("action index {0} is outside the 7x7 grid")]
    InvalidAction(usize),
    #[error("no collision-free spawn found after {0} attempts")]
    SpawnFailure(usize),
    #[error("episode already finished; reset before stepping")]
    EpisodeFinished,
    #[error("step before reset")]
    NotStarted,
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("map line {line}: {message}")]
    MapSyntax { line: usize, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Wraps an angle into [−π, π).
pub fn normalize_yaw(yaw: f64) -> f64 {
    let wrapped = (yaw + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentPose {
    pub position: Vec3,
    pub yaw: f64,
}

impl AgentPose {
    pub fn new(position: Vec3, yaw: f64) -> Self {
        Self {
            position,
            yaw: normalize_yaw(yaw),
        }
    }

    pub fn altitude(&self) -> f64 {
        self.position[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub width: usize,
    pub height: usize,
    pub horizontal_fov: f64,
    pub vertical_fov: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            horizontal_fov: FRAC_PI_2,
            vertical_fov: FRAC_PI_2,
        }
    }
}

impl CameraModel {
    pub fn square(side: usize) -> Self {
        Self {
            width: side,
            height: side,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        if self.width < 2 || self.height < 2 {
            return Err(WorldError::InvalidCamera(format!(
                "resolution {}x{} is below 2x2",
                self.width, self.height
            )));
        }
        for (name, fov) in [
            ("horizontal", self.horizontal_fov),
            ("vertical", self.vertical_fov),
        ] {
            if !(fov > 0.0 && fov < PI) {
                return Err(WorldError::InvalidCamera(format!(
                    "{name} fov {fov} is outside (0, pi)"
                )));
            }
        }
        Ok(())
    }

    /// Unit ray through the centre of pixel `(u, v)` in the camera frame
    /// `(forward, toward +yaw, up)`.
    pub fn pixel_ray(&self, u: usize, v: usize) -> Vec3 {
        let a = (self.horizontal_fov / 2.0).tan() * ((2 * u + 1) as f64 / self.width as f64 - 1.0);
        let b = (self.vertical_fov / 2.0).tan() * (1.0 - (2 * v + 1) as f64 / self.height as f64);
        geometry::normalize([1.0, a, b])
    }
}

/// Geometry of the action grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionGrid {
    pub forward_step: f64,
    /// Yaw change per column away from the centre, radians.
    pub yaw_step: f64,
    /// Altitude change per row away from the centre, meters.
    pub climb_step: f64,
}

impl Default for ActionGrid {
    fn default() -> Self {
        Self {
            forward_step: 0.5,
            yaw_step: 15f64.to_radians(),
            climb_step: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionCommand {
    pub action_index: usize,
    pub yaw_delta: f64,
    pub climb_delta: f64,
    pub forward_step: f64,
}

impl ActionCommand {
    pub fn new(action_index: usize, grid: &ActionGrid) -> Result<Self, WorldError> {
        if action_index >= NUM_ACTIONS {
            return Err(WorldError::InvalidAction(action_index));
        }
        let row = (action_index / GRID_SIDE) as f64;
        let col = (action_index % GRID_SIDE) as f64;
        Ok(Self {
            action_index,
            yaw_delta: (col - 3.0) * grid.yaw_step,
            climb_delta: (3.0 - row) * grid.climb_step,
            forward_step: grid.forward_step,
        })
    }
}

/// Turns first, then flies `forward_step` along the new heading and climbs.
/// Altitude is clamped to the room; horizontal escape is left for the
/// collision check.
pub fn apply_action(pose: &AgentPose, cmd: &ActionCommand, bounds: &Aabb) -> AgentPose {
    let yaw = normalize_yaw(pose.yaw + cmd.yaw_delta);
    let [x, y, z] = pose.position;
    let z = (z + cmd.climb_delta).clamp(bounds.min[2], bounds.max[2]);
    AgentPose {
        position: [
            x + cmd.forward_step * yaw.cos(),
            y + cmd.forward_step * yaw.sin(),
            z,
        ],
        yaw,
    }
}

/// Distance from `p` to the nearest obstacle or wall; negative outside the
/// room.
pub fn signed_clearance(p: Vec3, map: &WorldMap) -> f64 {
    map.obstacles
        .iter()
        .map(|b| b.distance_to(p))
        .fold(map.bounds.interior_clearance(p), f64::min)
}

/// True iff a sphere of `radius` around the pose touches or intersects an
/// obstacle or leaves the room.
pub fn check_collision(pose: &AgentPose, map: &WorldMap, radius: f64) -> bool {
    signed_clearance(pose.position, map) <= radius
}

/// Range along a unit ray from `origin` to the first surface, capped at
/// `max_range`.
pub fn cast_ray(origin: Vec3, dir: Vec3, map: &WorldMap) -> f64 {
    let mut t = map.bounds.ray_exit(origin, dir).min(map.max_range);
    for b in &map.obstacles {
        if let Some(hit) = b.ray_entry(origin, dir) {
            t = t.min(hit);
        }
    }
    t
}

pub fn render_depth(
    pose: &AgentPose,
    map: &WorldMap,
    cam: &CameraModel,
) -> Result<DepthImage, WorldError> {
    cam.validate()?;
    if !map.bounds.contains_point(pose.position) {
        return Err(WorldError::InvalidPose(pose.position));
    }
    let (s, c) = pose.yaw.sin_cos();
    let forward = [c, s, 0.0];
    let left = [-s, c, 0.0];
    let mut values = Vec::with_capacity(cam.width * cam.height);
    for v in 0..cam.height {
        for u in 0..cam.width {
            let r = cam.pixel_ray(u, v);
            let dir = [
                r[0] * forward[0] + r[1] * left[0],
                r[0] * forward[1] + r[1] * left[1],
                r[2],
            ];
            values.push(cast_ray(pose.position, dir, map));
        }
    }
    Ok(DepthImage {
        width: cam.width,
        height: cam.height,
        max_range: map.max_range,
        values,
    })
}

/// Samples a collision-free pose from the map's spawn regions, or from the
/// whole room when none are declared. Deterministic per seed.
pub fn spawn(map: &WorldMap, rng_seed: u64, radius: f64) -> Result<AgentPose, WorldError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed);
    let whole_room = [SpawnRegion {
        min: map.bounds.min,
        max: map.bounds.max,
        yaw: SpawnYaw::Uniform(-PI, PI),
    }];
    let regions: &[SpawnRegion] = if map.spawns.is_empty() {
        &whole_room
    } else {
        &map.spawns
    };
    for _ in 0..SPAWN_ATTEMPTS {
        let region = &regions[rng.gen_range(0..regions.len())];
        let mut position = [0.0; 3];
        for (i, p) in position.iter_mut().enumerate() {
            *p = if region.max[i] > region.min[i] {
                rng.gen_range(region.min[i]..region.max[i])
            } else {
                region.min[i]
            };
        }
        let yaw = match region.yaw {
            SpawnYaw::Fixed(y) => y,
            SpawnYaw::Uniform(lo, hi) if hi > lo => rng.gen_range(lo..hi),
            SpawnYaw::Uniform(lo, _) => lo,
        };
        let pose = AgentPose::new(position, yaw);
        if !check_collision(&pose, map, radius) {
            return Ok(pose);
        }
    }
    Err(WorldError::SpawnFailure(SPAWN_ATTEMPTS))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room(side: f64) -> WorldMap {
        WorldMap::new(Aabb::new([0.0; 3], [side; 3]), vec![], DEFAULT_MAX_RANGE).unwrap()
    }

    #[test]
    fn yaw_normalization_range() {
        assert_eq!(normalize_yaw(PI), -PI);
        assert_eq!(normalize_yaw(-PI), -PI);
        assert!((normalize_yaw(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        let tiny = normalize_yaw(-1e-300);
        assert!((-PI..PI).contains(&tiny));
    }

    #[test]
    fn action_mapping() {
        let g = ActionGrid::default();
        let centre = ActionCommand::new(FORWARD_ACTION, &g).unwrap();
        assert_eq!((centre.yaw_delta, centre.climb_delta), (0.0, 0.0));
        let c = ActionCommand::new(0, &g).unwrap();
        assert!((c.yaw_delta + 45f64.to_radians()).abs() < 1e-15);
        assert_eq!(c.climb_delta, 0.75);
        let c = ActionCommand::new(48, &g).unwrap();
        assert!((c.yaw_delta - 45f64.to_radians()).abs() < 1e-15);
        assert_eq!(c.climb_delta, -0.75);
        assert_eq!(
            ActionCommand::new(49, &g),
            Err(WorldError::InvalidAction(49))
        );
    }

    #[test]
    fn centre_cell_flies_straight() {
        let map = room(10.0);
        let pose = AgentPose::new([5.0, 5.0, 1.0], 0.0);
        let cmd = ActionCommand::new(FORWARD_ACTION, &ActionGrid::default()).unwrap();
        let next = apply_action(&pose, &cmd, &map.bounds);
        assert_eq!(next.position, [5.5, 5.0, 1.0]);
        assert_eq!(next.yaw, 0.0);
    }

    #[test]
    fn right_column_turns_then_moves() {
        let map = room(10.0);
        let pose = AgentPose::new([5.0, 5.0, 1.0], 0.0);
        let cmd = ActionCommand::new(27, &ActionGrid::default()).unwrap();
        let next = apply_action(&pose, &cmd, &map.bounds);
        let half_sqrt2 = 0.5 * std::f64::consts::FRAC_1_SQRT_2;
        assert!((next.yaw - PI / 4.0).abs() < 1e-15);
        assert!((next.position[0] - 5.0 - half_sqrt2).abs() < 1e-12);
        assert!((next.position[1] - 5.0 - half_sqrt2).abs() < 1e-12);
        assert_eq!(next.position[2], 1.0);
    }

    #[test]
    fn top_row_climbs_and_altitude_clamps() {
        let map = room(10.0);
        let grid = ActionGrid::default();
        let up = ActionCommand::new(3, &grid).unwrap();
        let next = apply_action(&AgentPose::new([5.0, 5.0, 1.0], 0.0), &up, &map.bounds);
        assert_eq!(next.altitude(), 1.75);
        assert_eq!(next.yaw, 0.0);
        let high = apply_action(&AgentPose::new([5.0, 5.0, 9.5], 0.0), &up, &map.bounds);
        assert_eq!(high.altitude(), 10.0);
        let down = ActionCommand::new(45, &grid).unwrap();
        let low = apply_action(&AgentPose::new([5.0, 5.0, 0.5], 0.0), &down, &map.bounds);
        assert_eq!(low.altitude(), 0.0);
    }

    #[test]
    fn collision_examples() {
        let map = WorldMap::new(
            Aabb::new([0.0; 3], [10.0; 3]),
            vec![Aabb::new([6.0, 0.0, 0.0], [7.0, 10.0, 10.0])],
            20.0,
        )
        .unwrap();
        let near = AgentPose::new([5.85, 5.0, 5.0], 0.0);
        assert!(check_collision(&near, &map, 0.2));
        // Touching counts: clearance exactly equal to the radius.
        let touching = AgentPose::new([5.75, 5.0, 5.0], 0.0);
        assert_eq!(signed_clearance(touching.position, &map), 0.25);
        assert!(check_collision(&touching, &map, 0.25));
        assert!(!check_collision(&touching, &map, 0.25 - 1e-12));
        assert!(!check_collision(
            &AgentPose::new([3.0, 5.0, 5.0], 0.0),
            &room(10.0),
            0.2
        ));
        assert!(!check_collision(
            &AgentPose::new([5.0, 5.0, 5.0], 0.0),
            &room(10.0),
            0.2
        ));
        assert!(check_collision(
            &AgentPose::new([0.2, 5.0, 5.0], 0.0),
            &room(10.0),
            0.2
        ));
        assert!(check_collision(
            &AgentPose::new([-1.0, 5.0, 5.0], 0.0),
            &room(10.0),
            0.2
        ));
    }

    #[test]
    fn render_rejects_pose_outside() {
        let r = render_depth(
            &AgentPose::new([11.0, 5.0, 5.0], 0.0),
            &room(10.0),
            &CameraModel::default(),
        );
        assert!(matches!(r, Err(WorldError::InvalidPose(_))));
    }

    #[test]
    fn empty_world_renders_max_range() {
        let map = WorldMap::new(Aabb::new([-50.0; 3], [50.0; 3]), vec![], 20.0).unwrap();
        let img = render_depth(
            &AgentPose::new([0.0; 3], 0.3),
            &map,
            &CameraModel::default(),
        )
        .unwrap();
        assert!(img.values.iter().all(|&d| d == 20.0));
    }

    #[test]
    fn centre_ray_reads_perpendicular_distance() {
        let map = WorldMap::new(Aabb::new([0.0; 3], [2.0, 100.0, 100.0]), vec![], 20.0).unwrap();
        let cam = CameraModel::square(3);
        let img = render_depth(&AgentPose::new([0.0, 50.0, 50.0], 0.0), &map, &cam).unwrap();
        assert_eq!(img.get(1, 1), 2.0);
    }

    #[test]
    fn image_columns_follow_positive_yaw() {
        // Wall close on the +y side only.
        let map = WorldMap::new(Aabb::new([-50.0; 3], [50.0, 1.0, 50.0]), vec![], 20.0).unwrap();
        let img = render_depth(
            &AgentPose::new([0.0; 3], 0.0),
            &map,
            &CameraModel::square(8),
        )
        .unwrap();
        assert!(img.get(7, 4) < img.get(0, 4));
    }

    #[test]
    fn singleton_spawn_is_exact() {
        let map = room(10.0)
            .with_spawns(vec![SpawnRegion::point([2.0, 3.0, 4.0], 0.5)])
            .unwrap();
        for seed in [0, 1, 99] {
            assert_eq!(
                spawn(&map, seed, 0.2).unwrap(),
                AgentPose::new([2.0, 3.0, 4.0], 0.5)
            );
        }
    }

    #[test]
    fn spawn_fails_when_blocked() {
        let map = room(10.0)
            .with_spawns(vec![SpawnRegion::point([0.1, 3.0, 4.0], 0.0)])
            .unwrap();
        assert_eq!(
            spawn(&map, 3, 0.2),
            Err(WorldError::SpawnFailure(SPAWN_ATTEMPTS))
        );
    }
}
