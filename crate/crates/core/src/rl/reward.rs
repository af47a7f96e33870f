use super::{Preference, RlError, Task};
use crate::sim::Measurement;

/// Auto-scaling reward: mean SLA-relative delay plus α per deployed instance,
/// both negated.
pub fn reward_as(delays: &[(f64, f64)], vnf_total: u64, alpha: f64) -> Result<f64, RlError> {
    if delays.is_empty() {
        return Err(RlError::EmptyRequests);
    }
    let qos = delays.iter().map(|&(d, sla)| d / sla).sum::<f64>() / delays.len() as f64;
    Ok(-qos - alpha * vnf_total as f64)
}

/// Power-management reward: the auto-scaling reward minus β·power.
pub fn reward_pm(
    delays: &[(f64, f64)],
    vnf_total: u64,
    power_total: f64,
    alpha: f64,
    beta: f64,
) -> Result<f64, RlError> {
    Ok(reward_as(delays, vnf_total, alpha)? - beta * power_total)
}

/// Reward of a measurement under a task and preference. A request set that
/// was entirely skipped (every endpoint down) contributes no QoS term.
pub fn reward(task: Task, m: &Measurement, sla_ms: f64, pref: Preference) -> Result<f64, RlError> {
    let delays = m.delay_pairs(sla_ms);
    let resource = |a: f64| -a * m.vnf_total as f64;
    match task {
        Task::AutoScaling if delays.is_empty() => Ok(resource(pref.alpha)),
        Task::AutoScaling => reward_as(&delays, m.vnf_total, pref.alpha),
        Task::PowerManagement => {
            let beta = pref
                .beta
                .ok_or_else(|| RlError::Config("power-management reward needs β".into()))?;
            if delays.is_empty() {
                Ok(resource(pref.alpha) - beta * m.power_total)
            } else {
                reward_pm(&delays, m.vnf_total, m.power_total, pref.alpha, beta)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_evaluation() {
        let d = [(500.0, 1000.0), (1000.0, 1000.0)];
        let r = reward_as(&d, 10, 0.01).unwrap();
        // oracle: -(0.5 + 1.0) / 2 - 0.01 * 10
        assert!((r - (-0.85)).abs() < 1e-12);
        let p = reward_pm(&d, 10, 3.0, 0.01, 0.1).unwrap();
        assert!((p - (-1.15)).abs() < 1e-12);
        assert_eq!(reward_pm(&d, 10, 3.0, 0.01, 0.0).unwrap(), r);
        assert_eq!(reward_pm(&d, 10, 0.0, 0.01, 0.1).unwrap(), r);
    }

    #[test]
    fn alpha_zero_is_pure_qos_and_linear() {
        let d = [(30.0, 60.0)];
        assert_eq!(reward_as(&d, 7, 0.0).unwrap(), -0.5);
        let qos = reward_as(&d, 7, 0.0).unwrap();
        let r1 = reward_as(&d, 7, 0.02).unwrap() - qos;
        let r2 = reward_as(&d, 7, 0.04).unwrap() - qos;
        assert_eq!(r2, 2.0 * r1);
    }

    #[test]
    fn empty_set_is_an_error() {
        assert!(matches!(
            reward_as(&[], 3, 0.1),
            Err(RlError::EmptyRequests)
        ));
    }
}
