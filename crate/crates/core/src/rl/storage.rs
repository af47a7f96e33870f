use std::sync::Arc;

use crate::encoding::SurrogateState;

#[derive(Debug, Clone)]
pub struct Transition {
    pub state: SurrogateState,
    /// Chosen class per (node, type) row.
    pub classes: Arc<Vec<usize>>,
    /// Joint log-probability under the behaviour parameters.
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    /// Last transition of an episode.
    pub done: bool,
    /// For an episode cut at a window boundary rather than terminated:
    /// the value of the state that would have come next.
    pub truncated_value: Option<f64>,
}

/// Rollout buffer consumed by one PPO update.
#[derive(Debug, Clone, Default)]
pub struct Storage {
    transitions: Vec<Transition>,
    /// Value of the state following the final transition, when the rollout
    /// stopped mid-episode.
    pub bootstrap_value: f64,
}

impl Storage {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: Transition) {
        self.transitions.push(t);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
        self.bootstrap_value = 0.0;
    }

    pub fn mean_reward(&self) -> f64 {
        if self.transitions.is_empty() {
            return 0.0;
        }
        self.transitions.iter().map(|t| t.reward).sum::<f64>() / self.transitions.len() as f64
    }
}

/// Generalized advantage estimates and λ-returns.
///
/// At a `done` step the TD target bootstraps from `truncated[t]` when
/// present (the episode was cut, not ended) and from 0 otherwise; GAE never
/// propagates across a `done`. `bootstrap` is the value after the final
/// transition when that one is not `done`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    truncated: &[Option<f64>],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut gae = 0.0;
    for t in (0..n).rev() {
        let next_value = if dones[t] {
            truncated[t].unwrap_or(0.0)
        } else if t + 1 < n {
            values[t + 1]
        } else {
            bootstrap
        };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value - values[t];
        gae = delta + gamma * lambda * live * gae;
        adv[t] = gae;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Advantages from explicit discounted TD-error sums.
    fn oracle(
        rewards: &[f64],
        values: &[f64],
        dones: &[bool],
        cut: &[Option<f64>],
        boot: f64,
        g: f64,
        l: f64,
    ) -> Vec<f64> {
        let n = rewards.len();
        let next = |t: usize| {
            if dones[t] {
                cut[t].unwrap_or(0.0)
            } else if t + 1 < n {
                values[t + 1]
            } else {
                boot
            }
        };
        let delta: Vec<f64> = (0..n)
            .map(|t| rewards[t] + g * next(t) - values[t])
            .collect();
        (0..n)
            .map(|t| {
                let mut s = 0.0;
                let mut w = 1.0;
                for k in t..n {
                    s += w * delta[k];
                    if dones[k] {
                        break;
                    }
                    w *= g * l;
                }
                s
            })
            .collect()
    }

    #[test]
    fn matches_explicit_sums() {
        let r = [1.0, -0.5, 0.25, 2.0, -1.0];
        let v = [0.1, 0.2, -0.3, 0.4, 0.0];
        let d = [false, false, true, false, false];
        for cut in [[None; 5], [None, None, Some(-0.6), None, None]] {
            let (adv, ret) = compute_gae(&r, &v, &d, &cut, 0.7, 0.99, 0.95);
            for (a, b) in adv.iter().zip(oracle(&r, &v, &d, &cut, 0.7, 0.99, 0.95)) {
                assert!((a - b).abs() < 1e-12);
            }
            for i in 0..5 {
                assert!((ret[i] - adv[i] - v[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn lambda_zero_is_one_step_td() {
        let (adv, _) = compute_gae(
            &[1.0, 2.0],
            &[0.5, 0.25],
            &[false, true],
            &[None, None],
            0.0,
            0.9,
            0.0,
        );
        assert!((adv[0] - (1.0 + 0.9 * 0.25 - 0.5)).abs() < 1e-15);
        assert!((adv[1] - (2.0 - 0.25)).abs() < 1e-15);
        let (adv, _) = compute_gae(
            &[1.0, 2.0],
            &[0.5, 0.25],
            &[false, true],
            &[None, Some(3.0)],
            0.0,
            0.9,
            0.0,
        );
        assert!((adv[1] - (2.0 + 0.9 * 3.0 - 0.25)).abs() < 1e-15);
    }
}
