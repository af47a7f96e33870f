use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::datagen::DatasetRecord;
use crate::pref::PreferenceDistribution;
use crate::rl::{reward, Agent, Preference, Task};
use crate::sim::{ActionMatrix, EnvConfig, NetworkEnv, Topology};

/// Records per evaluation episode; each episode restarts from its first
/// record's deployment.
pub const EVAL_EPISODE_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub start: usize,
    pub preference: Preference,
    pub rewards: Vec<f64>,
    pub vnf_totals: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mean_reward: f64,
    /// Violated paths over all routed paths.
    pub slav: f64,
    pub mean_vnf_total: f64,
    pub mean_power_total: f64,
    pub steps: usize,
    pub paths: usize,
    pub episodes: Vec<EpisodeTrace>,
}

fn check_compat(agent: &Agent, topology: &Topology, pref: Preference) -> Result<(), EvalError> {
    pref.check_task(agent.task)
        .map_err(|e| EvalError::Incompatible(e.to_string()))?;
    if agent.net.config().pref_dims != agent.input.dims() {
        return Err(EvalError::Incompatible(
            "agent preference layout is inconsistent".into(),
        ));
    }
    if topology.is_empty() {
        return Err(EvalError::Incompatible("empty topology".into()));
    }
    Ok(())
}

fn run<F>(
    agent: &Agent,
    topology: &Topology,
    env_config: &EnvConfig,
    records: &[DatasetRecord],
    mut pref_for_episode: F,
) -> Result<MetricReport, EvalError>
where
    F: FnMut() -> Result<Preference, EvalError>,
{
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut env = NetworkEnv::new(topology.clone(), env_config.clone())?;
    let (mut reward_sum, mut vnf_sum, mut power_sum) = (0.0, 0.0, 0.0);
    let (mut violations, mut paths, mut steps) = (0usize, 0usize, 0usize);
    let mut episodes = Vec::new();
    for (k, chunk) in records.chunks(EVAL_EPISODE_LEN).enumerate() {
        let pref = pref_for_episode()?;
        check_compat(agent, topology, pref)?;
        env.reset(chunk[0].deployment.clone())?;
        let mut trace = EpisodeTrace {
            start: k * EVAL_EPISODE_LEN,
            preference: pref,
            rewards: Vec::new(),
            vnf_totals: Vec::new(),
        };
        for rec in chunk {
            let action = match agent.state(&env, &rec.requests, pref)? {
                Some(state) => agent.act_greedy(&state)?,
                None => ActionMatrix::keep(topology.len()),
            };
            let m = env.step(&action, &rec.requests)?;
            let r = reward(agent.task, &m, env_config.sla_ms, pref)?;
            reward_sum += r;
            vnf_sum += m.vnf_total as f64;
            power_sum += m.power_total;
            violations += m.violations;
            paths += m.routes.len();
            steps += 1;
            trace.rewards.push(r);
            trace.vnf_totals.push(m.vnf_total);
        }
        episodes.push(trace);
    }
    let n = steps as f64;
    Ok(MetricReport {
        mean_reward: reward_sum / n,
        slav: if paths == 0 {
            0.0
        } else {
            violations as f64 / paths as f64
        },
        mean_vnf_total: vnf_sum / n,
        mean_power_total: power_sum / n,
        steps,
        paths,
        episodes,
    })
}

/// Greedy rollout over `records` with a fixed preference.
pub fn eval_static(
    agent: &Agent,
    topology: &Topology,
    env_config: &EnvConfig,
    records: &[DatasetRecord],
    pref: Preference,
) -> Result<MetricReport, EvalError> {
    run(agent, topology, env_config, records, || Ok(pref))
}

/// Greedy rollout with the preference redrawn at every episode start.
pub fn eval_dynamic(
    agent: &Agent,
    topology: &Topology,
    env_config: &EnvConfig,
    records: &[DatasetRecord],
    alpha: &PreferenceDistribution,
    beta: Option<&PreferenceDistribution>,
    seed: u64,
) -> Result<MetricReport, EvalError> {
    match (agent.task, beta) {
        (Task::PowerManagement, None) => {
            return Err(EvalError::Incompatible(
                "power-management agent needs a β distribution".into(),
            ))
        }
        (Task::AutoScaling, Some(_)) => {
            return Err(EvalError::Incompatible(
                "β distribution given for an auto-scaling agent".into(),
            ))
        }
        _ => {}
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut episode = 0u64;
    run(agent, topology, env_config, records, || {
        let a = alpha.draw(episode, &mut rng)?;
        let b = beta.map(|d| d.draw(episode, &mut rng)).transpose()?;
        episode += 1;
        Ok(Preference::new(a, b))
    })
}

/// Z-scores with population standard deviation. A constant input yields all
/// zeros and `true` as the zero-variance flag.
pub fn normalize_rewards(rewards: &[f64]) -> Result<(Vec<f64>, bool), EvalError> {
    if rewards.len() < 2 {
        return Err(EvalError::TooFewReports(rewards.len()));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let std = (rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    if std <= f64::EPSILON * mean.abs().max(1.0) {
        return Ok((vec![0.0; rewards.len()], true));
    }
    Ok((rewards.iter().map(|r| (r - mean) / std).collect(), false))
}
