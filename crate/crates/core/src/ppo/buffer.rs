#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Normalized depth frame the action was chosen from.
    pub observation: Vec<f64>,
    pub action: usize,
    pub log_prob_old: f64,
    pub reward: f64,
    pub value_old: f64,
    pub done: bool,
    /// Step index within its episode.
    pub timestep: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBuffer {
    pub transitions: Vec<Transition>,
    /// Value estimate of the state after the last transition; 0 when that
    /// transition ended its episode.
    pub bootstrap_value: f64,
    pub returns: Vec<f64>,
    pub advantages: Vec<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn is_ready(&self) -> bool {
        !self.transitions.is_empty()
            && self.returns.len() == self.transitions.len()
            && self.advantages.len() == self.transitions.len()
    }

    /// Fills value targets (`A + V` before normalization) and normalized
    /// GAE advantages. Rewards are multiplied by `reward_scale` first.
    pub fn compute_advantages(&mut self, gamma: f64, lambda: f64, reward_scale: f64) {
        let rewards: Vec<f64> = self
            .transitions
            .iter()
            .map(|t| t.reward * reward_scale)
            .collect();
        let values: Vec<f64> = self.transitions.iter().map(|t| t.value_old).collect();
        let dones: Vec<bool> = self.transitions.iter().map(|t| t.done).collect();
        let mut adv = gae(
            &rewards,
            &values,
            &dones,
            self.bootstrap_value,
            gamma,
            lambda,
        );
        self.returns = adv.iter().zip(&values).map(|(a, v)| a + v).collect();
        normalize_advantages(&mut adv);
        self.advantages = adv;
    }
}

/// `G_t = r_t + γ·(1 − done_t)·G_{t+1}`, seeded with `bootstrap` past the
/// last step.
pub fn discounted_return(rewards: &[f64], dones: &[bool], gamma: f64, bootstrap: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut next = bootstrap;
    for t in (0..rewards.len()).rev() {
        let carry = if dones[t] { 0.0 } else { gamma * next };
        out[t] = rewards[t] + carry;
        next = out[t];
    }
    out
}

/// Generalized advantage estimates (unnormalized).
///
/// `δ_t = r_t + γ·V_{t+1}·(1 − done_t) − V_t`,
/// `A_t = δ_t + γλ·(1 − done_t)·A_{t+1}`, with `V_T = bootstrap`.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { bootstrap };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        adv[t] = delta + gamma * lambda * live * next_adv;
        next_adv = adv[t];
    }
    adv
}

/// Shifts to zero mean and scales to unit (population) variance. A constant
/// batch becomes all zeros.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.is_empty() {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    for a in adv.iter_mut() {
        *a = if std > 1e-12 { (*a - mean) / std } else { 0.0 };
    }
}
