//! Minimal tensor engine for the convolutional actor-critic.
//!
//! Only the layers this network needs are implemented (same-padded conv,
//! ReLU, 2×2 max-pool, dense, softmax), each with a hand-derived backward
//! kernel. A forward pass records a [`GradientTape`]; `backward_into` walks
//! it in reverse and accumulates parameter gradients.

mod adam;
mod arch;
mod layers;
mod network;
mod policy;
mod tensor;

pub use adam::{AdamState, BETA1, BETA2, EPSILON};
pub use arch::{ArchConfig, ConvSpec};
pub use network::{ConvLayer, DenseLayer, GradientTape, Gradients, NetworkWeights, PolicyOutput};
pub use policy::{argmax_action, entropy, log_softmax, sample_action, softmax, ActionMode};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NnError {
    #[error("network config: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite {0}")]
    NonFinite(String),
}
