use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::network::PolicyOutput;

/// `log softmax` with the max-logit shift.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - m - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// Shannon entropy of the action distribution, nats.
pub fn entropy(policy: &PolicyOutput) -> f64 {
    -policy
        .probs
        .iter()
        .zip(&policy.log_probs)
        .map(|(p, l)| p * l)
        .sum::<f64>()
}

/// First index of the largest probability.
pub fn argmax_action(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Draws from the categorical distribution over `probs`.
pub fn sample_action<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    match WeightedIndex::new(probs) {
        Ok(dist) => dist.sample(rng),
        Err(_) => argmax_action(probs),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    Sample,
    Argmax,
}

impl ActionMode {
    pub fn select<R: Rng + ?Sized>(self, probs: &[f64], rng: &mut R) -> usize {
        match self {
            ActionMode::Sample => sample_action(probs, rng),
            ActionMode::Argmax => argmax_action(probs),
        }
    }
}

impl std::str::FromStr for ActionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sample" => Ok(Self::Sample),
            "argmax" => Ok(Self::Argmax),
            other => Err(format!(
                "unknown action mode `{other}` (expected sample|argmax)"
            )),
        }
    }
}

impl std::fmt::Display for ActionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ActionMode::Sample => "sample",
            ActionMode::Argmax => "argmax",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_logits_give_uniform() {
        let p = softmax(&[0.0; 49]);
        for v in p {
            assert!((v - 1.0 / 49.0).abs() < 1e-15);
        }
    }

    #[test]
    fn shift_invariance() {
        let logits: Vec<f64> = (0..49).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let shifted: Vec<f64> = logits.iter().map(|l| l + 123.25).collect();
        for (a, b) in softmax(&logits).iter().zip(softmax(&shifted)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn one_hot_always_sampled() {
        let mut probs = vec![0.0; 49];
        probs[7] = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            assert_eq!(sample_action(&probs, &mut rng), 7);
        }
    }

    #[test]
    fn argmax_picks_unique_max() {
        let mut probs = vec![0.01; 49];
        probs[24] = 0.5;
        assert_eq!(argmax_action(&probs), 24);
        assert_eq!(argmax_action(&[0.5, 0.5]), 0);
    }

    #[test]
    fn huge_logits_stay_finite() {
        let lp = log_softmax(&[1000.0, 0.0, -1000.0]);
        assert!(lp.iter().all(|v| v.is_finite()));
        assert_eq!(lp[0], 0.0);
    }
}
