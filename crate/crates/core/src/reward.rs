//! Free-space reward.
//!
//! A depth frame is thresholded against a fraction of its own maximum to find
//! the "far" pixels. Their centroid is compared with the image centre, and
//! the pixel distance `d` between them sets the per-step reward `100 / d`.
//! A collision overrides everything with a fixed `−10`.

use crate::depth::DepthImage;

pub const COLLISION_REWARD: f64 = -10.0;
pub const FREE_SPACE_REWARD: f64 = 100.0;
pub const DEFAULT_TAU: f64 = 0.7;
/// Floor on `d` before dividing; caps the reward at 100.
pub const DEFAULT_D_MIN: f64 = 1.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RewardError {
    #[error("distance to free space must be non-negative, got {0}")]
    NegativeDistance(f64),
    #[error("threshold fraction must lie in (0, 1), got {0}")]
    BadTau(f64),
    #[error("distance floor must be positive, got {0}")]
    BadDMin(f64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeSpaceMask {
    pub width: usize,
    pub height: usize,
    /// Row-major; `true` marks a far pixel.
    pub bits: Vec<bool>,
}

impl FreeSpaceMask {
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeSpaceResult {
    /// `(u, v)` = (column, row) in pixels.
    pub centroid: Option<(f64, f64)>,
    pub d: f64,
    pub mask_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardValue {
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardConfig {
    pub tau: f64,
    pub d_min: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            d_min: DEFAULT_D_MIN,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(RewardError::BadTau(self.tau));
        }
        if !(self.d_min.is_finite() && self.d_min > 0.0) {
            return Err(RewardError::BadDMin(self.d_min));
        }
        Ok(())
    }

    /// Reward of a non-colliding frame.
    pub fn frame_reward(&self, depth: &DepthImage) -> Result<RewardValue, RewardError> {
        let fs = free_space_centroid(&threshold_free_space(depth, self.tau));
        reward_with_floor(false, fs.d, self.d_min)
    }
}

/// Marks pixels at least `tau` times the frame maximum. An all-zero frame
/// has no far pixels.
pub fn threshold_free_space(depth: &DepthImage, tau: f64) -> FreeSpaceMask {
    let max = depth.max_value();
    let bits = if max > 0.0 {
        let cut = tau * max;
        depth.values.iter().map(|&v| v >= cut).collect()
    } else {
        vec![false; depth.values.len()]
    };
    FreeSpaceMask {
        width: depth.width,
        height: depth.height,
        bits,
    }
}

/// Half the image diagonal: the offset assigned to a frame with no free
/// space.
pub fn max_offset(width: usize, height: usize) -> f64 {
    let w = width as f64 - 1.0;
    let h = height as f64 - 1.0;
    (w * w + h * h).sqrt() / 2.0
}

pub fn free_space_centroid(mask: &FreeSpaceMask) -> FreeSpaceResult {
    let (mut su, mut sv, mut n) = (0.0, 0.0, 0usize);
    for v in 0..mask.height {
        let row = &mask.bits[v * mask.width..(v + 1) * mask.width];
        for (u, _) in row.iter().enumerate().filter(|(_, &b)| b) {
            su += u as f64;
            sv += v as f64;
            n += 1;
        }
    }
    let total = mask.width * mask.height;
    let mask_fraction = if total == 0 {
        0.0
    } else {
        n as f64 / total as f64
    };
    if n == 0 {
        return FreeSpaceResult {
            centroid: None,
            d: max_offset(mask.width, mask.height),
            mask_fraction,
        };
    }
    let cu = su / n as f64;
    let cv = sv / n as f64;
    let du = cu - (mask.width as f64 - 1.0) / 2.0;
    let dv = cv - (mask.height as f64 - 1.0) / 2.0;
    FreeSpaceResult {
        centroid: Some((cu, cv)),
        d: (du * du + dv * dv).sqrt(),
        mask_fraction,
    }
}

pub fn reward(collision: bool, d: f64) -> Result<RewardValue, RewardError> {
    reward_with_floor(collision, d, DEFAULT_D_MIN)
}

pub fn reward_with_floor(collision: bool, d: f64, d_min: f64) -> Result<RewardValue, RewardError> {
    if collision {
        return Ok(RewardValue {
            value: COLLISION_REWARD,
        });
    }
    if d.is_nan() || d < 0.0 {
        return Err(RewardError::NegativeDistance(d));
    }
    Ok(RewardValue {
        value: FREE_SPACE_REWARD / d.max(d_min),
    })
}

pub fn normalize_depth(depth: &DepthImage) -> DepthImage {
    DepthImage {
        width: depth.width,
        height: depth.height,
        max_range: 1.0,
        values: depth.values.iter().map(|v| v / depth.max_range).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> DepthImage {
        let values = (0..h)
            .flat_map(|v| (0..w).map(move |u| (u, v)))
            .map(|(u, v)| f(u, v))
            .collect();
        DepthImage::new(w, h, 20.0, values).unwrap()
    }

    #[test]
    fn uniform_frame_is_all_free() {
        let m = threshold_free_space(&img(16, 16, |_, _| 20.0), 0.7);
        assert!(m.bits.iter().all(|&b| b));
    }

    #[test]
    fn split_frame_keeps_far_half() {
        let m = threshold_free_space(&img(16, 16, |u, _| if u < 8 { 2.0 } else { 20.0 }), 0.7);
        for v in 0..16 {
            for u in 0..16 {
                assert_eq!(m.bits[v * 16 + u], u >= 8);
            }
        }
    }

    #[test]
    fn zero_frame_gives_empty_mask() {
        let m = threshold_free_space(&img(4, 4, |_, _| 0.0), 0.7);
        assert_eq!(m.count(), 0);
    }

    #[test]
    fn centroid_examples() {
        let full = FreeSpaceMask {
            width: 128,
            height: 128,
            bits: vec![true; 128 * 128],
        };
        let r = free_space_centroid(&full);
        assert_eq!(r.centroid, Some((63.5, 63.5)));
        assert_eq!(r.d, 0.0);
        assert_eq!(r.mask_fraction, 1.0);

        let mut single = vec![false; 128 * 128];
        single[0] = true;
        let r = free_space_centroid(&FreeSpaceMask {
            width: 128,
            height: 128,
            bits: single,
        });
        assert_eq!(r.centroid, Some((0.0, 0.0)));
        assert!((r.d - 89.802_561_210_691_54).abs() < 1e-9);

        let r = free_space_centroid(&FreeSpaceMask {
            width: 128,
            height: 128,
            bits: vec![false; 128 * 128],
        });
        assert_eq!(r.centroid, None);
        assert_eq!(r.d, max_offset(128, 128));
        assert!((r.d - 89.802_561_210_691_54).abs() < 1e-9);
    }

    #[test]
    fn reward_examples() {
        assert_eq!(reward(true, 3.0).unwrap().value, -10.0);
        assert_eq!(reward(false, 10.0).unwrap().value, 10.0);
        assert_eq!(reward(false, 0.0).unwrap().value, 100.0);
        assert_eq!(reward(false, 0.5).unwrap().value, 100.0);
        assert_eq!(
            reward(false, -1.0),
            Err(RewardError::NegativeDistance(-1.0))
        );
        assert!(reward(false, f64::NAN).is_err());
    }

    #[test]
    fn normalization_examples() {
        let n = normalize_depth(&img(2, 2, |u, v| if (u, v) == (0, 0) { 5.0 } else { 20.0 }));
        assert_eq!(n.values, vec![0.25, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn config_validation() {
        assert!(RewardConfig::default().validate().is_ok());
        assert!(RewardConfig {
            tau: 1.0,
            d_min: 1.0
        }
        .validate()
        .is_err());
        assert!(RewardConfig {
            tau: 0.5,
            d_min: 0.0
        }
        .validate()
        .is_err());
    }
}
