use crate::nn::{entropy, PolicyOutput};

/// Negated clipped surrogate for one sample:
/// `−min(r·A, clip(r, 1−ε, 1+ε)·A)`.
pub fn clipped_surrogate_loss(ratio: f64, advantage: f64, clip_epsilon: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip_epsilon, 1.0 + clip_epsilon);
    -(ratio * advantage).min(clipped * advantage)
}

/// Loss terms of one transition and the gradient of
/// `policy + value_coef·value − entropy_coef·entropy` with respect to the
/// network outputs, scaled by `weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleLoss {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub ratio: f64,
    pub log_prob: f64,
    pub total: f64,
    pub dlogits: Vec<f64>,
    pub dvalue: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn sample_loss(
    out: &PolicyOutput,
    action: usize,
    log_prob_old: f64,
    advantage: f64,
    target: f64,
    clip_epsilon: f64,
    value_coef: f64,
    entropy_coef: f64,
    weight: f64,
) -> SampleLoss {
    let log_prob = out.log_probs[action];
    let ratio = (log_prob - log_prob_old).exp();
    let policy = clipped_surrogate_loss(ratio, advantage, clip_epsilon);
    let err = out.value - target;
    let value = err * err;
    let h = entropy(out);
    let total = policy + value_coef * value - entropy_coef * h;

    // d(policy)/d(log π_a): the unclipped branch carries −A·r; when the clipped
    // branch is strictly smaller it is constant in θ.
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip_epsilon, 1.0 + clip_epsilon) * advantage;
    let dlogp = if unclipped <= clipped {
        -advantage * ratio
    } else {
        0.0
    };

    // d log π_a / d z_j = 1[j = a] − p_j;  d H / d z_j = −p_j (log p_j + H)
    let dlogits = out
        .probs
        .iter()
        .zip(&out.log_probs)
        .enumerate()
        .map(|(j, (&p, &lp))| {
            let onehot = if j == action { 1.0 } else { 0.0 };
            let d_policy = dlogp * (onehot - p);
            let d_entropy = -p * (lp + h);
            weight * (d_policy - entropy_coef * d_entropy)
        })
        .collect();
    SampleLoss {
        policy,
        value,
        entropy: h,
        ratio,
        log_prob,
        total,
        dlogits,
        dvalue: weight * 2.0 * value_coef * err,
    }
}
