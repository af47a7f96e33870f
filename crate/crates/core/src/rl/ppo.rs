use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compute_gae, RlError, Storage, Transition};
use crate::neural::{
    clip_grad_norm, Gradients, Graph, NeuralError, Optimizer, OptimizerKind, ParamStore,
    PolicyValueNet, Tensor,
};

/// Bound on the log-ratio before exponentiating.
const LOG_RATIO_CLAMP: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    /// Learning rate η.
    pub lr: f64,
    /// Transitions collected between updates (i_update).
    pub update_interval: usize,
    /// Number of collect-and-update iterations (i_end).
    pub iterations: usize,
    /// Clip range ε.
    pub clip: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub epochs: usize,
    /// 0 uses the whole rollout as one minibatch.
    pub minibatch_size: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: Option<f64>,
    pub normalize_advantages: bool,
    /// Train the value head on standardized returns (running mean and std
    /// over every return seen so far) instead of raw returns.
    pub normalize_returns: bool,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            lr: 3e-4,
            update_interval: 64,
            iterations: 200,
            clip: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            epochs: 4,
            minibatch_size: 32,
            entropy_coef: 0.01,
            value_coef: 0.5,
            max_grad_norm: Some(0.5),
            normalize_advantages: true,
            normalize_returns: true,
            optimizer: OptimizerKind::adam(),
            seed: 0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        let bad = |m: &str| Err(RlError::Config(m.to_string()));
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return bad("clip must lie in (0, 1)");
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must lie in [0, 1]");
        }
        if self.update_interval == 0 {
            return bad("update_interval must be >= 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if !(self.lr > 0.0) {
            return bad("lr must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub entropy: f64,
    pub grad_norm: f64,
}

/// Running mean and variance (Chan et al. parallel merge).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: f64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push_batch(&mut self, xs: &[f64]) {
        if xs.is_empty() {
            return;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        let total = self.count + n;
        let delta = mean - self.mean;
        self.mean += delta * n / total;
        self.m2 += m2 + delta * delta * self.count * n / total;
        self.count = total;
    }

    pub fn count(&self) -> f64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population standard deviation, floored so that standardizing never
    /// divides by ~0.
    pub fn std(&self) -> f64 {
        if self.count < 2.0 {
            return 1.0;
        }
        (self.m2 / self.count).sqrt().max(1e-4)
    }
}

/// Optimizer state plus the behaviour parameters θ_old.
#[derive(Debug, Clone)]
pub struct PpoLearner {
    optimizer: Optimizer,
    theta_old: ParamStore,
    returns: Option<RunningStats>,
}

impl PpoLearner {
    pub fn new(net: &PolicyValueNet, config: &PpoConfig) -> Self {
        Self {
            optimizer: Optimizer::new(config.optimizer, config.lr),
            theta_old: net.params().clone(),
            returns: config.normalize_returns.then(RunningStats::default),
        }
    }

    /// Maps a value-head output to return scale.
    pub fn value_to_return(&self, raw: f64) -> f64 {
        match &self.returns {
            Some(s) if s.count() > 0.0 => s.mean() + s.std() * raw,
            _ => raw,
        }
    }

    fn return_to_target(&self, ret: f64) -> f64 {
        match &self.returns {
            Some(s) if s.count() > 0.0 => (ret - s.mean()) / s.std(),
            _ => ret,
        }
    }

    pub fn theta_old(&self) -> &ParamStore {
        &self.theta_old
    }
}

struct Sample<'a> {
    t: &'a Transition,
    advantage: f64,
    ret: f64,
}

/// Mean PPO loss over a minibatch and its gradient.
///
/// `transitions`, `advantages` and `returns` are aligned.
pub fn ppo_loss(
    net: &PolicyValueNet,
    transitions: &[&Transition],
    advantages: &[f64],
    returns: &[f64],
    config: &PpoConfig,
) -> Result<(f64, LossReport, Gradients), RlError> {
    if transitions.is_empty() {
        return Err(RlError::EmptyStorage);
    }
    let samples: Vec<Sample> = transitions
        .iter()
        .zip(advantages)
        .zip(returns)
        .map(|((t, &advantage), &ret)| Sample { t, advantage, ret })
        .collect();
    let scale = 1.0 / samples.len() as f64;
    let per: Vec<Result<([f64; 4], Gradients), NeuralError>> = samples
        .par_iter()
        .map(|s| sample_loss(net, s, config, scale))
        .collect();
    let mut grads = Gradients::zeros_like(net.params());
    let mut sums = [0.0; 4];
    for r in per {
        let (parts, g) = r?;
        for (s, p) in sums.iter_mut().zip(parts) {
            *s += p * scale;
        }
        grads.accumulate(&g);
    }
    let [loss, actor_loss, critic_loss, entropy] = sums;
    Ok((
        loss,
        LossReport {
            actor_loss,
            critic_loss,
            entropy,
            grad_norm: grads.global_norm(),
        },
        grads,
    ))
}

fn sample_loss(
    net: &PolicyValueNet,
    s: &Sample,
    config: &PpoConfig,
    scale: f64,
) -> Result<([f64; 4], Gradients), NeuralError> {
    let mut g = Graph::new(net.params());
    let out = net.forward(&mut g, &s.t.state)?;

    let picked = g.pick_per_row(out.log_probs, s.t.classes.clone());
    let logp = g.sum_all(picked);
    let old = g.constant(Tensor::scalar(s.t.log_prob));
    let diff = g.sub(logp, old);
    let diff = g.clamp(diff, -LOG_RATIO_CLAMP, LOG_RATIO_CLAMP);
    let ratio = g.exp(diff);
    let surr1 = g.scale(ratio, s.advantage);
    let clipped = g.clamp(ratio, 1.0 - config.clip, 1.0 + config.clip);
    let surr2 = g.scale(clipped, s.advantage);
    let surr = g.min(surr1, surr2);
    let actor = g.scale(surr, -1.0);

    let target = g.constant(Tensor::scalar(s.ret));
    let err = g.sub(out.value, target);
    let critic = g.square(err);

    let probs = g.exp(out.log_probs);
    let plogp = g.mul(probs, out.log_probs);
    let row_neg_entropy = g.sum_cols(plogp);
    let neg_entropy = g.mean_all(row_neg_entropy);

    let vc = g.scale(critic, config.value_coef);
    let ec = g.scale(neg_entropy, config.entropy_coef);
    let ac = g.add(actor, vc);
    let loss = g.add(ac, ec);

    let mut grads = Gradients::zeros_like(net.params());
    g.backward_into(loss, scale, &mut grads)?;
    let v = |x| g.value(x).item();
    Ok(([v(loss), v(actor), v(critic), -v(neg_entropy)], grads))
}

/// Normalizes to zero mean and unit std; a constant batch becomes all zeros.
fn normalize(adv: &mut [f64]) {
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for a in adv.iter_mut() {
        *a = if std > 1e-8 { (*a - mean) / std } else { 0.0 };
    }
}

/// Runs the configured epochs of clipped-surrogate updates over `storage`,
/// then sets θ_old ← θ and clears the storage.
pub fn ppo_update<R: Rng + ?Sized>(
    storage: &mut Storage,
    net: &mut PolicyValueNet,
    learner: &mut PpoLearner,
    config: &PpoConfig,
    rng: &mut R,
) -> Result<LossReport, RlError> {
    if storage.is_empty() {
        return Err(RlError::EmptyStorage);
    }
    let ts = storage.transitions();
    let rewards: Vec<f64> = ts.iter().map(|t| t.reward).collect();
    let values: Vec<f64> = ts.iter().map(|t| t.value).collect();
    let dones: Vec<bool> = ts.iter().map(|t| t.done).collect();
    let truncated: Vec<Option<f64>> = ts.iter().map(|t| t.truncated_value).collect();
    let (mut adv, returns) = compute_gae(
        &rewards,
        &values,
        &dones,
        &truncated,
        storage.bootstrap_value,
        config.gamma,
        config.gae_lambda,
    );
    if config.normalize_advantages {
        normalize(&mut adv);
    }
    if let Some(stats) = &mut learner.returns {
        stats.push_batch(&returns);
    }
    let targets: Vec<f64> = returns
        .iter()
        .map(|&r| learner.return_to_target(r))
        .collect();

    let n = ts.len();
    let mb = if config.minibatch_size == 0 {
        n
    } else {
        config.minibatch_size.min(n)
    };
    let mut order: Vec<usize> = (0..n).collect();
    let mut total = LossReport::default();
    let mut batches = 0;
    for _ in 0..config.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(mb) {
            let batch: Vec<&Transition> = chunk.iter().map(|&i| &ts[i]).collect();
            let a: Vec<f64> = chunk.iter().map(|&i| adv[i]).collect();
            let r: Vec<f64> = chunk.iter().map(|&i| targets[i]).collect();
            let (loss, report, mut grads) = ppo_loss(net, &batch, &a, &r, config)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(NeuralError::NonFinite("ppo loss").into());
            }
            if let Some(max) = config.max_grad_norm {
                clip_grad_norm(&mut grads, max);
            }
            learner.optimizer.step(net.params_mut(), &grads);
            total.actor_loss += report.actor_loss;
            total.critic_loss += report.critic_loss;
            total.entropy += report.entropy;
            total.grad_norm += report.grad_norm;
            batches += 1;
        }
    }
    let k = batches as f64;
    total.actor_loss /= k;
    total.critic_loss /= k;
    total.entropy /= k;
    total.grad_norm /= k;
    learner.theta_old = net.params().clone();
    storage.clear();
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_guards_constant_batches() {
        let mut a = [2.0, 2.0, 2.0];
        normalize(&mut a);
        assert_eq!(a, [0.0; 3]);
        let mut b = [1.0, 2.0, 3.0];
        normalize(&mut b);
        assert!((b[0] + 1.224744871391589).abs() < 1e-12);
    }

    #[test]
    fn running_stats_match_pooled_moments() {
        let xs: Vec<f64> = (0..37)
            .map(|i| ((i * 7919) % 101) as f64 * 0.3 - 4.0)
            .collect();
        let mut s = RunningStats::default();
        for chunk in xs.chunks(5) {
            s.push_batch(chunk);
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((s.mean() - mean).abs() < 1e-12);
        assert!((s.std() - std).abs() < 1e-12);
        assert_eq!(RunningStats::default().std(), 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(PpoConfig::default().validate().is_ok());
        assert!(PpoConfig {
            clip: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(PpoConfig {
            gamma: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(PpoConfig {
            update_interval: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
