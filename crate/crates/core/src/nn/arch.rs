use super::NnError;
use crate::world::NUM_ACTIONS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub filters: usize,
    pub kernel: usize,
}

/// Shape of the actor-critic network.
///
/// Each conv stage is a stride-1 same-padded convolution, ReLU and a 2×2
/// max-pool, so the input side must be divisible by `2^stages`. The dense
/// trunk uses ReLU; the 49-way policy head and scalar value head are linear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchConfig {
    pub input_size: usize,
    pub conv: Vec<ConvSpec>,
    pub dense: Vec<usize>,
}

impl ArchConfig {
    /// 128×128×1 input; 96@7×7, 64@5×5, 64@3×3, 64@3×3; dense 1024, 256, 128.
    pub fn full() -> Self {
        Self::from_lists(128, &[96, 64, 64, 64], &[7, 5, 3, 3], &[1024, 256, 128])
    }

    /// Small network used by the gradient-check suites.
    pub fn reduced() -> Self {
        Self::from_lists(16, &[8, 8, 8, 8], &[7, 5, 3, 3], &[32, 16, 8])
    }

    pub fn from_lists(
        input_size: usize,
        filters: &[usize],
        kernels: &[usize],
        dense: &[usize],
    ) -> Self {
        Self {
            input_size,
            conv: filters
                .iter()
                .zip(kernels)
                .map(|(&filters, &kernel)| ConvSpec { filters, kernel })
                .collect(),
            dense: dense.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.conv.is_empty() {
            return Err(NnError::Config(
                "at least one conv stage is required".into(),
            ));
        }
        if self.dense.is_empty() {
            return Err(NnError::Config(
                "at least one dense layer is required".into(),
            ));
        }
        let stride = 1usize << self.conv.len();
        if self.input_size == 0 || !self.input_size.is_multiple_of(stride) {
            return Err(NnError::Config(format!(
                "input size {} is not divisible by {stride} ({} pooling stages)",
                self.input_size,
                self.conv.len()
            )));
        }
        for (i, c) in self.conv.iter().enumerate() {
            if c.filters == 0 || c.kernel == 0 || c.kernel % 2 == 0 {
                return Err(NnError::Config(format!(
                    "conv {i}: need filters > 0 and an odd kernel, got {}@{}",
                    c.filters, c.kernel
                )));
            }
        }
        if let Some(i) = self.dense.iter().position(|&w| w == 0) {
            return Err(NnError::Config(format!("dense {i} has zero width")));
        }
        Ok(())
    }

    /// Side length of the feature maps after the last pool.
    pub fn final_side(&self) -> usize {
        self.input_size >> self.conv.len()
    }

    pub fn flatten_width(&self) -> usize {
        let side = self.final_side();
        side * side * self.conv.last().map_or(1, |c| c.filters)
    }

    pub fn num_actions(&self) -> usize {
        NUM_ACTIONS
    }

    pub fn input_len(&self) -> usize {
        self.input_size * self.input_size
    }
}
