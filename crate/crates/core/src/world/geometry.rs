pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Axis-aligned box, `min < max` on every axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn has_positive_extent(&self) -> bool {
        (0..3).all(|i| self.max[i] > self.min[i])
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        (0..3).all(|i| other.min[i] >= self.min[i] && other.max[i] <= self.max[i])
    }

    pub fn contains_point(&self, p: Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Euclidean distance from `p` to the closed box; 0 inside.
    pub fn distance_to(&self, p: Vec3) -> f64 {
        let mut sq = 0.0;
        for ((&x, &lo), &hi) in p.iter().zip(&self.min).zip(&self.max) {
            let d = if x < lo {
                lo - x
            } else if x > hi {
                x - hi
            } else {
                0.0
            };
            sq += d * d;
        }
        sq.sqrt()
    }

    /// Distance from `p` to the nearest face when `p` is inside, negative
    /// outside (the most-violated axis).
    pub fn interior_clearance(&self, p: Vec3) -> f64 {
        (0..3)
            .map(|i| (p[i] - self.min[i]).min(self.max[i] - p[i]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Slab test. Returns the ray parameter of the first surface point at or
    /// after the origin; 0 when the origin is inside the box.
    pub fn ray_entry(&self, origin: Vec3, dir: Vec3) -> Option<f64> {
        let mut t_near = 0.0_f64;
        let mut t_far = f64::INFINITY;
        for i in 0..3 {
            if dir[i] == 0.0 {
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[i];
            let mut t0 = (self.min[i] - origin[i]) * inv;
            let mut t1 = (self.max[i] - origin[i]) * inv;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_near = t_near.max(t0);
            t_far = t_far.min(t1);
            if t_near > t_far {
                return None;
            }
        }
        Some(t_near)
    }

    /// Ray parameter at which a ray starting inside the box leaves it.
    pub fn ray_exit(&self, origin: Vec3, dir: Vec3) -> f64 {
        let mut t = f64::INFINITY;
        for i in 0..3 {
            if dir[i] > 0.0 {
                t = t.min((self.max[i] - origin[i]) / dir[i]);
            } else if dir[i] < 0.0 {
                t = t.min((self.min[i] - origin[i]) / dir[i]);
            }
        }
        t.max(0.0)
    }
}
