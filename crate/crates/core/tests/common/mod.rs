//! Reference implementations used as test oracles. Each one is written
//! independently of the library code it checks: straightforward loops,
//! no shared helpers.
#![allow(dead_code, clippy::needless_range_loop)]

use dppo::nn::NetworkWeights;
use dppo::ppo::sample_loss;
use dppo::world::{Aabb, CameraModel, Vec3};
use rand::seq::index::sample;
use rand::Rng;

// ---------------------------------------------------------------- geometry

/// Unnormalized pinhole ray `(1, a, b)` through the centre of pixel `(u, v)`.
pub fn pixel_tangents(cam: &CameraModel, u: usize, v: usize) -> (f64, f64) {
    let a = (cam.horizontal_fov / 2.0).tan() * ((2 * u + 1) as f64 / cam.width as f64 - 1.0);
    let b = (cam.vertical_fov / 2.0).tan() * (1.0 - (2 * v + 1) as f64 / cam.height as f64);
    (a, b)
}

/// World-frame unit direction of pixel `(u, v)` for a camera yawed by `yaw`.
pub fn world_ray(cam: &CameraModel, yaw: f64, u: usize, v: usize) -> Vec3 {
    let (a, b) = pixel_tangents(cam, u, v);
    let n = (1.0 + a * a + b * b).sqrt();
    let (f, l, up) = (1.0 / n, a / n, b / n);
    [
        f * yaw.cos() - l * yaw.sin(),
        f * yaw.sin() + l * yaw.cos(),
        up,
    ]
}

/// Nearest positive hit of a ray with the six face rectangles of a box,
/// found plane by plane.
pub fn ray_box_faces(origin: Vec3, dir: Vec3, b: &Aabb) -> Option<f64> {
    let mut best: Option<f64> = None;
    for axis in 0..3 {
        if dir[axis] == 0.0 {
            continue;
        }
        for plane in [b.min[axis], b.max[axis]] {
            let t = (plane - origin[axis]) / dir[axis];
            if t <= 0.0 {
                continue;
            }
            let on_face = (0..3).filter(|&k| k != axis).all(|k| {
                let p = origin[k] + t * dir[k];
                p >= b.min[k] && p <= b.max[k]
            });
            if on_face && best.is_none_or(|x| t < x) {
                best = Some(t);
            }
        }
    }
    best
}

/// Distance from an interior point along a ray to the walls of a room.
pub fn ray_room_exit(origin: Vec3, dir: Vec3, room: &Aabb) -> f64 {
    let mut t = f64::INFINITY;
    for axis in 0..3 {
        if dir[axis] > 0.0 {
            t = t.min((room.max[axis] - origin[axis]) / dir[axis]);
        } else if dir[axis] < 0.0 {
            t = t.min((room.min[axis] - origin[axis]) / dir[axis]);
        }
    }
    t
}

/// Collision by definition: the closest point of any obstacle is within
/// `radius`, or the sphere reaches a wall or lies outside the room.
pub fn collides(p: Vec3, room: &Aabb, obstacles: &[Aabb], radius: f64) -> bool {
    for axis in 0..3 {
        if p[axis] - room.min[axis] <= radius || room.max[axis] - p[axis] <= radius {
            return true;
        }
    }
    obstacles.iter().any(|b| {
        let mut sq = 0.0;
        for axis in 0..3 {
            let c = p[axis].max(b.min[axis]).min(b.max[axis]);
            sq += (p[axis] - c) * (p[axis] - c);
        }
        sq.sqrt() <= radius
    })
}

// ---------------------------------------------------------------- reward

/// Mean `(u, v)` of set pixels and its distance from the image centre,
/// by enumeration. `None` for an empty mask.
pub fn centroid_oracle(width: usize, height: usize, bits: &[bool]) -> Option<((f64, f64), f64)> {
    let mut us = Vec::new();
    let mut vs = Vec::new();
    for v in 0..height {
        for u in 0..width {
            if bits[v * width + u] {
                us.push(u as f64);
                vs.push(v as f64);
            }
        }
    }
    if us.is_empty() {
        return None;
    }
    let cu = us.iter().sum::<f64>() / us.len() as f64;
    let cv = vs.iter().sum::<f64>() / vs.len() as f64;
    let du = cu - (width as f64 - 1.0) / 2.0;
    let dv = cv - (height as f64 - 1.0) / 2.0;
    Some(((cu, cv), du.hypot(dv)))
}

// ---------------------------------------------------------------- returns

/// `A_t = Σ_l (γλ)^l δ_{t+l}`, summed term by term until an episode end.
pub fn gae_oracle(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let n = rewards.len();
    let value_at = |k: usize| if k < n { values[k] } else { bootstrap };
    let delta = |k: usize| {
        let next = if dones[k] {
            0.0
        } else {
            gamma * value_at(k + 1)
        };
        rewards[k] + next - values[k]
    };
    (0..n)
        .map(|t| {
            let mut total = 0.0;
            let mut weight = 1.0;
            for k in t..n {
                total += weight * delta(k);
                if dones[k] {
                    break;
                }
                weight *= gamma * lambda;
            }
            total
        })
        .collect()
}

/// `G_t − V_t` with `G_t = Σ_k γ^k r_{t+k}` plus the discounted bootstrap
/// when no episode end intervenes.
pub fn mc_advantage_oracle(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
) -> Vec<f64> {
    let n = rewards.len();
    (0..n)
        .map(|t| {
            let mut g = 0.0;
            let mut w = 1.0;
            let mut ended = false;
            for k in t..n {
                g += w * rewards[k];
                if dones[k] {
                    ended = true;
                    break;
                }
                w *= gamma;
            }
            if !ended {
                g += w * bootstrap;
            }
            g - values[t]
        })
        .collect()
}

// ---------------------------------------------------------------- network

fn naive_conv(input: &[f64], cin: usize, side: usize, w: &[f64], b: &[f64], k: usize) -> Vec<f64> {
    let cout = b.len();
    let pad = (k / 2) as isize;
    let mut out = vec![0.0; cout * side * side];
    for f in 0..cout {
        for y in 0..side {
            for x in 0..side {
                let mut acc = b[f];
                for c in 0..cin {
                    for ky in 0..k {
                        for kx in 0..k {
                            let iy = y as isize + ky as isize - pad;
                            let ix = x as isize + kx as isize - pad;
                            if iy < 0 || ix < 0 || iy >= side as isize || ix >= side as isize {
                                continue;
                            }
                            let wv = w[((f * cin + c) * k + ky) * k + kx];
                            acc += wv * input[(c * side + iy as usize) * side + ix as usize];
                        }
                    }
                }
                out[(f * side + y) * side + x] = acc;
            }
        }
    }
    out
}

fn naive_pool(input: &[f64], channels: usize, side: usize) -> Vec<f64> {
    let half = side / 2;
    let mut out = vec![0.0; channels * half * half];
    for c in 0..channels {
        for y in 0..half {
            for x in 0..half {
                let at = |dy: usize, dx: usize| input[(c * side + 2 * y + dy) * side + 2 * x + dx];
                out[(c * half + y) * half + x] = at(0, 0).max(at(0, 1)).max(at(1, 0)).max(at(1, 1));
            }
        }
    }
    out
}

fn naive_dense(x: &[f64], w: &[f64], b: &[f64]) -> Vec<f64> {
    (0..b.len())
        .map(|o| b[o] + (0..x.len()).map(|i| w[o * x.len() + i] * x[i]).sum::<f64>())
        .collect()
}

/// Logits and value computed layer by layer with nested loops.
pub fn naive_forward(weights: &NetworkWeights, obs: &[f64]) -> (Vec<f64>, f64) {
    let mut x = obs.to_vec();
    let mut side = weights.arch.input_size;
    let mut cin = 1;
    for (layer, spec) in weights.conv.iter().zip(&weights.arch.conv) {
        let mut a = naive_conv(
            &x,
            cin,
            side,
            &layer.weight.data,
            &layer.bias.data,
            spec.kernel,
        );
        for v in a.iter_mut() {
            *v = v.max(0.0);
        }
        x = naive_pool(&a, spec.filters, side);
        side /= 2;
        cin = spec.filters;
    }
    for layer in &weights.dense {
        x = naive_dense(&x, &layer.weight.data, &layer.bias.data);
        for v in x.iter_mut() {
            *v = v.max(0.0);
        }
    }
    let logits = naive_dense(&x, &weights.policy.weight.data, &weights.policy.bias.data);
    let value = naive_dense(&x, &weights.value.weight.data, &weights.value.bias.data)[0];
    (logits, value)
}

/// `log_softmax` by the definition `z_i − ln Σ exp(z_j)`, shifted by the max.
pub fn log_softmax_oracle(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

// ---------------------------------------------------------------- gradient check

/// One training sample for the full PPO loss.
#[derive(Debug, Clone)]
pub struct LossSample {
    pub obs: Vec<f64>,
    pub action: usize,
    pub log_prob_old: f64,
    pub advantage: f64,
    pub target: f64,
}

pub const CLIP: f64 = 0.2;
pub const VALUE_COEF: f64 = 0.5;
pub const ENTROPY_COEF: f64 = 0.01;

/// Mean total loss `clip + c_v·(V − G)² − c_e·H` over the batch.
pub fn batch_loss(weights: &NetworkWeights, batch: &[LossSample]) -> f64 {
    let w = 1.0 / batch.len() as f64;
    batch
        .iter()
        .map(|s| {
            let (out, _) = weights.forward(&s.obs).unwrap();
            let l = sample_loss(
                &out,
                s.action,
                s.log_prob_old,
                s.advantage,
                s.target,
                CLIP,
                VALUE_COEF,
                ENTROPY_COEF,
                w,
            );
            w * l.total
        })
        .sum()
}

pub fn batch_gradient(weights: &NetworkWeights, batch: &[LossSample]) -> NetworkWeights {
    let w = 1.0 / batch.len() as f64;
    let mut grads = weights.zeros_like();
    for s in batch {
        let (out, tape) = weights.forward(&s.obs).unwrap();
        let l = sample_loss(
            &out,
            s.action,
            s.log_prob_old,
            s.advantage,
            s.target,
            CLIP,
            VALUE_COEF,
            ENTROPY_COEF,
            w,
        );
        weights
            .backward_into(&tape, &l.dlogits, l.dvalue, &mut grads)
            .unwrap();
    }
    grads
}

/// Builds a batch whose probability ratios land both inside and outside the
/// clip range, with advantages of both signs.
pub fn loss_batch<R: Rng>(weights: &NetworkWeights, n: usize, rng: &mut R) -> Vec<LossSample> {
    let len = weights.arch.input_len();
    let shifts = [-0.5, 0.0, 0.5, 0.1, -0.1, 0.03];
    (0..n)
        .map(|i| {
            let obs: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..1.0)).collect();
            let action = rng.gen_range(0..49);
            let (out, _) = weights.forward(&obs).unwrap();
            LossSample {
                log_prob_old: out.log_probs[action] + shifts[i % shifts.len()],
                obs,
                action,
                advantage: if i % 2 == 0 { 1.3 } else { -0.7 } * rng.gen_range(0.5..1.5),
                target: rng.gen_range(-1.0..1.0),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub checked: usize,
    pub passed: usize,
    /// `(tensor name, index, analytic, numeric)` of every failure.
    pub failures: Vec<(String, usize, f64, f64)>,
    pub per_tensor: Vec<(String, usize)>,
}

impl GradCheckReport {
    pub fn pass_rate(&self) -> f64 {
        self.passed as f64 / self.checked as f64
    }
}

/// Central differences with step `h` on up to `per_tensor` sampled entries of
/// every parameter tensor (all of them when the tensor is smaller).
///
/// An entry passes when `|a − n| / max(|a|, |n|) ≤ rel_tol`; an analytic
/// gradient of exactly zero passes when `|n| ≤ zero_tol`.
pub fn gradient_check<R: Rng>(
    weights: &NetworkWeights,
    batch: &[LossSample],
    per_tensor: usize,
    h: f64,
    rel_tol: f64,
    zero_tol: f64,
    rng: &mut R,
) -> GradCheckReport {
    let analytic = batch_gradient(weights, batch);
    let names = weights.param_names();
    let mut probe = weights.clone();
    let mut report = GradCheckReport {
        checked: 0,
        passed: 0,
        failures: Vec::new(),
        per_tensor: Vec::new(),
    };
    let tensor_count = weights.params().len();
    for ti in 0..tensor_count {
        let len = weights.params()[ti].data.len();
        let picks: Vec<usize> = if len <= per_tensor {
            (0..len).collect()
        } else {
            sample(rng, len, per_tensor).into_vec()
        };
        report.per_tensor.push((names[ti].clone(), picks.len()));
        for &i in &picks {
            let original = weights.params()[ti].data[i];
            probe.params_mut()[ti].data[i] = original + h;
            let up = batch_loss(&probe, batch);
            probe.params_mut()[ti].data[i] = original - h;
            let down = batch_loss(&probe, batch);
            probe.params_mut()[ti].data[i] = original;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.params()[ti].data[i];
            let ok = if a == 0.0 {
                numeric.abs() <= zero_tol
            } else {
                (a - numeric).abs() / a.abs().max(numeric.abs()) <= rel_tol
            };
            report.checked += 1;
            if ok {
                report.passed += 1;
            } else {
                report.failures.push((names[ti].clone(), i, a, numeric));
            }
        }
    }
    report
}
