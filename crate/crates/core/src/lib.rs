//! Depth-image navigation with proximal policy optimization.
//!
//! The crate is organised around the pipeline a training run follows:
//!
//! - [`world`]: axis-aligned indoor worlds, MAV kinematics on a 7×7 action
//!   grid, pinhole raycast depth rendering and collision checks.
//! - [`reward`]: free-space thresholding of a depth frame, the centroid of
//!   the free region and the per-step reward derived from its offset.
//! - [`nn`]: a small tensor engine with hand-written reverse-mode gradients
//!   hosting the shared-trunk convolutional actor-critic.
//! - [`ppo`]: rollout collection, returns and GAE, the clipped surrogate
//!   update and the episode-driven training loop.
//! - [`eval`]: Mean Safe Flight, moving-average returns and baseline
//!   comparisons.
//! - [`config`] and [`cli`]: run configuration files and the `dppo` command
//!   line entry points.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod depth;
pub mod eval;
pub mod nn;
pub mod pgm;
pub mod ppo;
pub mod reward;
pub mod seed;
pub mod world;

pub use depth::DepthImage;
