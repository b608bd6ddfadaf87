use rand::seq::SliceRandom;
use rand::Rng;

use super::buffer::RolloutBuffer;
use super::loss::sample_loss;
use super::{PpoConfig, PpoError};
use crate::nn::{AdamState, NetworkWeights, NnError};

/// Means over every sample seen during one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub update: u64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// Fraction of samples with `|r − 1| > ε`.
    pub clip_frac: f64,
    /// Mean of `(r − 1) − ln r`.
    pub approx_kl: f64,
}

/// Runs `epochs_per_update` passes of shuffled minibatch Adam steps over the
/// buffer. A non-finite loss or gradient restores the weights and optimizer
/// state held on entry.
pub fn ppo_update<R: Rng + ?Sized>(
    weights: &mut NetworkWeights,
    optimizer: &mut AdamState,
    buffer: &RolloutBuffer,
    config: &PpoConfig,
    update: u64,
    rng: &mut R,
) -> Result<UpdateStats, PpoError> {
    if !buffer.is_ready() {
        return Err(PpoError::NotReady);
    }
    let saved = (weights.clone(), optimizer.clone());
    match run_epochs(weights, optimizer, buffer, config, update, rng) {
        Ok(stats) => Ok(stats),
        Err(e) => {
            (*weights, *optimizer) = saved;
            Err(e)
        }
    }
}

fn run_epochs<R: Rng + ?Sized>(
    weights: &mut NetworkWeights,
    optimizer: &mut AdamState,
    buffer: &RolloutBuffer,
    config: &PpoConfig,
    update: u64,
    rng: &mut R,
) -> Result<UpdateStats, PpoError> {
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    let mut grads = weights.zeros_like();
    let (mut pl, mut vl, mut ent, mut clipped, mut kl, mut seen) =
        (0.0, 0.0, 0.0, 0usize, 0.0, 0usize);
    for _ in 0..config.epochs_per_update {
        order.shuffle(rng);
        for batch in order.chunks(config.minibatch_size) {
            for t in grads.params_mut() {
                t.data.fill(0.0);
            }
            let weight = 1.0 / batch.len() as f64;
            for &i in batch {
                let tr = &buffer.transitions[i];
                let (out, tape) = weights.forward(&tr.observation)?;
                let loss = sample_loss(
                    &out,
                    tr.action,
                    tr.log_prob_old,
                    buffer.advantages[i],
                    buffer.returns[i],
                    config.clip_epsilon,
                    config.value_coef,
                    config.entropy_coef,
                    weight,
                );
                if !loss.total.is_finite() {
                    return Err(PpoError::NonFinite(format!("loss at transition {i}")));
                }
                weights.backward_into(&tape, &loss.dlogits, loss.dvalue, &mut grads)?;
                pl += loss.policy;
                vl += loss.value;
                ent += loss.entropy;
                if (loss.ratio - 1.0).abs() > config.clip_epsilon {
                    clipped += 1;
                }
                kl += (loss.ratio - 1.0) - (loss.log_prob - tr.log_prob_old);
                seen += 1;
            }
            optimizer
                .step(weights, &grads, config.learning_rate)
                .map_err(|e| match e {
                    NnError::NonFinite(what) => PpoError::NonFinite(what),
                    other => PpoError::Nn(other),
                })?;
        }
    }
    let n = seen as f64;
    Ok(UpdateStats {
        update,
        policy_loss: pl / n,
        value_loss: vl / n,
        entropy: ent / n,
        clip_frac: clipped as f64 / n,
        approx_kl: kl / n,
    })
}
