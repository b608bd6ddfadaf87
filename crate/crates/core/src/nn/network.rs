use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::arch::ArchConfig;
use super::layers::{self, ConvShape};
use super::policy::log_softmax;
use super::tensor::Tensor;
use super::NnError;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    /// `[out, in, k, k]`
    pub weight: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `[out, in]`
    pub weight: Tensor,
    pub bias: Tensor,
}

impl DenseLayer {
    fn zeros(n_out: usize, n_in: usize) -> Self {
        Self {
            weight: Tensor::zeros(vec![n_out, n_in]),
            bias: Tensor::zeros(vec![n_out]),
        }
    }
}

/// Every learnable parameter of the shared-trunk actor-critic.
///
/// The same structure doubles as a gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights {
    pub arch: ArchConfig,
    pub conv: Vec<ConvLayer>,
    pub dense: Vec<DenseLayer>,
    pub policy: DenseLayer,
    pub value: DenseLayer,
}

pub type Gradients = NetworkWeights;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone)]
struct ConvRecord {
    input: Vec<f64>,
    /// Post-ReLU, pre-pool.
    activation: Vec<f64>,
    argmax: Vec<u32>,
}

#[derive(Debug, Clone)]
struct DenseRecord {
    input: Vec<f64>,
    activation: Vec<f64>,
}

/// Intermediates kept by [`NetworkWeights::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct GradientTape {
    arch: ArchConfig,
    conv: Vec<ConvRecord>,
    dense: Vec<DenseRecord>,
    head_input: Vec<f64>,
}

impl NetworkWeights {
    pub fn zeros(arch: &ArchConfig) -> Result<Self, NnError> {
        arch.validate()?;
        let mut conv = Vec::with_capacity(arch.conv.len());
        let mut cin = 1;
        for c in &arch.conv {
            conv.push(ConvLayer {
                weight: Tensor::zeros(vec![c.filters, cin, c.kernel, c.kernel]),
                bias: Tensor::zeros(vec![c.filters]),
            });
            cin = c.filters;
        }
        let mut dense = Vec::with_capacity(arch.dense.len());
        let mut n_in = arch.flatten_width();
        for &w in &arch.dense {
            dense.push(DenseLayer::zeros(w, n_in));
            n_in = w;
        }
        Ok(Self {
            arch: arch.clone(),
            conv,
            dense,
            policy: DenseLayer::zeros(arch.num_actions(), n_in),
            value: DenseLayer::zeros(1, n_in),
        })
    }

    /// He-normal weights (`std = sqrt(2 / fan_in)`), zero biases.
    pub fn init(arch: &ArchConfig, rng_seed: u64) -> Result<Self, NnError> {
        let mut w = Self::zeros(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        for t in w.weight_tensors_mut() {
            let fan_in: usize = t.shape[1..].iter().product();
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt())
                .map_err(|e| NnError::Config(e.to_string()))?;
            for v in t.data.iter_mut() {
                *v = normal.sample(&mut rng);
            }
        }
        Ok(w)
    }

    fn weight_tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.conv
            .iter_mut()
            .map(|l| &mut l.weight)
            .chain(self.dense.iter_mut().map(|l| &mut l.weight))
            .chain([&mut self.policy.weight, &mut self.value.weight])
    }

    /// All parameter tensors in a fixed order: per layer weight then bias;
    /// conv stages, dense trunk, policy head, value head.
    pub fn params(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        for l in &self.conv {
            out.push(&l.weight);
            out.push(&l.bias);
        }
        for l in self.dense.iter().chain([&self.policy, &self.value]) {
            out.push(&l.weight);
            out.push(&l.bias);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for l in &mut self.conv {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        for l in self
            .dense
            .iter_mut()
            .chain([&mut self.policy, &mut self.value])
        {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        out
    }

    /// Human-readable names matching [`Self::params`].
    pub fn param_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..self.conv.len() {
            out.push(format!("conv{i}.weight"));
            out.push(format!("conv{i}.bias"));
        }
        for i in 0..self.dense.len() {
            out.push(format!("dense{i}.weight"));
            out.push(format!("dense{i}.bias"));
        }
        for h in ["policy", "value"] {
            out.push(format!("{h}.weight"));
            out.push(format!("{h}.bias"));
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.params_mut() {
            t.data.fill(0.0);
        }
        z
    }

    pub fn all_finite(&self) -> bool {
        self.params().iter().all(|t| t.all_finite())
    }

    /// Adds `scale * other` element-wise.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        for (a, b) in self.params_mut().into_iter().zip(other.params()) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += scale * y;
            }
        }
    }

    pub fn same_shapes(&self, other: &Self) -> bool {
        let a = self.params();
        let b = other.params();
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.shape == y.shape)
    }

    /// Runs the network on one `input_size × input_size` frame given
    /// row-major.
    pub fn forward(&self, obs: &[f64]) -> Result<(PolicyOutput, GradientTape), NnError> {
        let arch = &self.arch;
        if obs.len() != arch.input_len() {
            return Err(NnError::Shape(format!(
                "observation has {} values, network expects {}x{}",
                obs.len(),
                arch.input_size,
                arch.input_size
            )));
        }
        if let Some(i) = obs.iter().position(|v| !v.is_finite()) {
            return Err(NnError::NonFinite(format!("observation value {i}")));
        }

        let mut x = obs.to_vec();
        let mut side = arch.input_size;
        let mut cin = 1;
        let mut conv_records = Vec::with_capacity(self.conv.len());
        for (layer, spec) in self.conv.iter().zip(&arch.conv) {
            let shape = ConvShape {
                cin,
                cout: spec.filters,
                side,
                kernel: spec.kernel,
            };
            let mut a = layers::conv_forward(shape, &x, &layer.weight.data, &layer.bias.data);
            layers::relu_inplace(&mut a);
            let (pooled, argmax) = layers::maxpool_forward(spec.filters, side, &a);
            conv_records.push(ConvRecord {
                input: std::mem::replace(&mut x, pooled),
                activation: a,
                argmax,
            });
            side /= 2;
            cin = spec.filters;
        }

        let mut dense_records = Vec::with_capacity(self.dense.len());
        for layer in &self.dense {
            let mut h = layers::dense_forward(&layer.weight.data, &layer.bias.data, &x);
            layers::relu_inplace(&mut h);
            dense_records.push(DenseRecord {
                input: std::mem::replace(&mut x, h.clone()),
                activation: h,
            });
        }

        let logits = layers::dense_forward(&self.policy.weight.data, &self.policy.bias.data, &x);
        let value = layers::dense_forward(&self.value.weight.data, &self.value.bias.data, &x)[0];
        let log_probs = log_softmax(&logits);
        let probs = log_probs.iter().map(|l| l.exp()).collect();
        Ok((
            PolicyOutput {
                logits,
                probs,
                log_probs,
                value,
            },
            GradientTape {
                arch: arch.clone(),
                conv: conv_records,
                dense: dense_records,
                head_input: x,
            },
        ))
    }

    /// Reverse pass: adds `∂loss/∂θ` into `grads`, given the loss gradient
    /// with respect to the policy logits and the value output.
    pub fn backward_into(
        &self,
        tape: &GradientTape,
        dlogits: &[f64],
        dvalue: f64,
        grads: &mut Gradients,
    ) -> Result<(), NnError> {
        if tape.arch != self.arch || grads.arch != self.arch {
            return Err(NnError::Shape(
                "tape or gradient buffer built for a different architecture".into(),
            ));
        }
        if dlogits.len() != self.arch.num_actions() {
            return Err(NnError::Shape(format!(
                "expected {} logit gradients, got {}",
                self.arch.num_actions(),
                dlogits.len()
            )));
        }

        let h = &tape.head_input;
        let mut dx = layers::dense_backward(
            &self.policy.weight.data,
            h,
            dlogits,
            &mut grads.policy.weight.data,
            &mut grads.policy.bias.data,
            true,
        )
        .unwrap_or_default();
        let dv = layers::dense_backward(
            &self.value.weight.data,
            h,
            &[dvalue],
            &mut grads.value.weight.data,
            &mut grads.value.bias.data,
            true,
        )
        .unwrap_or_default();
        for (a, b) in dx.iter_mut().zip(dv) {
            *a += b;
        }

        for ((layer, rec), g) in self
            .dense
            .iter()
            .zip(&tape.dense)
            .zip(grads.dense.iter_mut())
            .rev()
        {
            layers::relu_backward(&rec.activation, &mut dx);
            dx = layers::dense_backward(
                &layer.weight.data,
                &rec.input,
                &dx,
                &mut g.weight.data,
                &mut g.bias.data,
                true,
            )
            .unwrap_or_default();
        }

        let mut side = self.arch.final_side();
        for (idx, ((layer, rec), g)) in self
            .conv
            .iter()
            .zip(&tape.conv)
            .zip(grads.conv.iter_mut())
            .enumerate()
            .rev()
        {
            side *= 2;
            let spec = self.arch.conv[idx];
            let cin = if idx == 0 {
                1
            } else {
                self.arch.conv[idx - 1].filters
            };
            let mut da = layers::maxpool_backward(rec.activation.len(), &rec.argmax, &dx);
            layers::relu_backward(&rec.activation, &mut da);
            let shape = ConvShape {
                cin,
                cout: spec.filters,
                side,
                kernel: spec.kernel,
            };
            dx = layers::conv_backward(
                shape,
                &rec.input,
                &layer.weight.data,
                &da,
                &mut g.weight.data,
                &mut g.bias.data,
                idx > 0,
            )
            .unwrap_or_default();
        }
        Ok(())
    }

    pub fn backward(
        &self,
        tape: &GradientTape,
        dlogits: &[f64],
        dvalue: f64,
    ) -> Result<Gradients, NnError> {
        let mut grads = self.zeros_like();
        self.backward_into(tape, dlogits, dvalue, &mut grads)?;
        Ok(grads)
    }
}
