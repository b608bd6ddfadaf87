use super::network::{Gradients, NetworkWeights};
use super::NnError;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam moments, one flat buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(weights: &NetworkWeights) -> Self {
        let zeros: Vec<Vec<f64>> = weights
            .params()
            .iter()
            .map(|t| vec![0.0; t.len()])
            .collect();
        Self {
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn matches(&self, weights: &NetworkWeights) -> bool {
        let p = weights.params();
        p.len() == self.m.len()
            && p.len() == self.v.len()
            && p.iter()
                .zip(self.m.iter().zip(&self.v))
                .all(|(t, (m, v))| t.len() == m.len() && t.len() == v.len())
    }

    /// One bias-corrected Adam step. Non-finite gradients leave both the
    /// weights and the moments untouched.
    pub fn step(
        &mut self,
        weights: &mut NetworkWeights,
        grads: &Gradients,
        lr: f64,
    ) -> Result<(), NnError> {
        if !weights.same_shapes(grads) || !self.matches(weights) {
            return Err(NnError::Shape(
                "optimizer, weights and gradients disagree on shapes".into(),
            ));
        }
        if !grads.all_finite() {
            return Err(NnError::NonFinite("gradient".into()));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - BETA1.powi(t);
        let c2 = 1.0 - BETA2.powi(t);
        for (((w, g), m), v) in weights
            .params_mut()
            .into_iter()
            .zip(grads.params())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            for (((wi, &gi), mi), vi) in w
                .data
                .iter_mut()
                .zip(&g.data)
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *mi = BETA1 * *mi + (1.0 - BETA1) * gi;
                *vi = BETA2 * *vi + (1.0 - BETA2) * gi * gi;
                let mhat = *mi / c1;
                let vhat = *vi / c2;
                *wi -= lr * mhat / (vhat.sqrt() + EPSILON);
            }
        }
        Ok(())
    }
}
