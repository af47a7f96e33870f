use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    ppo_update, reward, Agent, PpoConfig, PpoLearner, Preference, RlError, Storage, Task,
    TrainingPreference, Transition,
};
use crate::datagen::DatasetRecord;
use crate::encoding::PreferenceInput;
use crate::eval::eval_static;
use crate::neural::{ModelConfig, NeuralError};
use crate::pref::PreferenceDistribution;
use crate::sim::{EnvConfig, NetworkEnv, Topology};

/// Where each episode's preference comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PreferenceSource {
    /// Static-preference baseline; the network gets no preference input.
    Fixed { preference: Preference },
    /// Dynamic preference drawn at every episode start.
    Sampled {
        alpha: PreferenceDistribution,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<PreferenceDistribution>,
    },
}

impl PreferenceSource {
    fn validate(&self, task: Task) -> Result<(), RlError> {
        match self {
            PreferenceSource::Fixed { preference } => preference.check_task(task),
            PreferenceSource::Sampled { alpha, beta } => {
                let no_sched = |d: &PreferenceDistribution| {
                    if matches!(d, PreferenceDistribution::Schedule(_)) {
                        Err(RlError::Config(
                            "schedules are for evaluation, not training".into(),
                        ))
                    } else {
                        Ok(())
                    }
                };
                no_sched(alpha)?;
                match (task, beta) {
                    (Task::PowerManagement, Some(b)) => no_sched(b),
                    (Task::PowerManagement, None) => Err(RlError::Config(
                        "power-management training needs a β distribution".into(),
                    )),
                    (Task::AutoScaling, Some(_)) => Err(RlError::Config(
                        "β distribution given for auto-scaling".into(),
                    )),
                    (Task::AutoScaling, None) => Ok(()),
                }
            }
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Preference, RlError> {
        match self {
            PreferenceSource::Fixed { preference } => Ok(*preference),
            PreferenceSource::Sampled { alpha, beta } => {
                let a = alpha.sample(rng)?;
                let b = beta.as_ref().map(|d| d.sample(rng)).transpose()?;
                Ok(Preference::new(a, b))
            }
        }
    }

    /// Preference used for periodic validation.
    fn validation_preference(&self) -> Option<Preference> {
        match self {
            PreferenceSource::Fixed { preference } => Some(*preference),
            PreferenceSource::Sampled { alpha, beta } => {
                let b = match beta {
                    Some(d) => Some(d.mean()?),
                    None => None,
                };
                Some(Preference::new(alpha.mean()?, b))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub task: Task,
    pub source: PreferenceSource,
    pub model: ModelConfig,
    pub ppo: PpoConfig,
    /// Dataset records per episode.
    pub episode_len: usize,
    /// Validate every this many iterations; 0 disables.
    pub validate_every: usize,
}

impl TrainConfig {
    pub fn new(task: Task, source: PreferenceSource) -> Self {
        Self {
            task,
            source,
            model: ModelConfig::default(),
            ppo: PpoConfig::default(),
            episode_len: 32,
            validate_every: 0,
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRecord {
    pub iter: usize,
    pub mean_reward: f64,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub entropy: f64,
    /// α of every episode started during this iteration's rollout.
    pub alpha_sampled: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_sampled: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val_reward: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub agent: Agent,
    pub log: Vec<TrainLogRecord>,
    /// Reward of every environment step, in order.
    pub step_rewards: Vec<f64>,
}

/// Independent RNG streams derived from one master seed.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    Init = 0,
    Preference = 1,
    Action = 2,
    Window = 3,
    Minibatch = 4,
}

pub(crate) fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

struct Episode {
    start: usize,
    step: usize,
    len: usize,
    pref: Preference,
}

/// Collect-and-update loop: sample a preference per episode, roll out with
/// the behaviour policy, update with PPO every `update_interval` steps.
pub fn train(
    topology: &Topology,
    env_config: &EnvConfig,
    records: &[DatasetRecord],
    validation: Option<&[DatasetRecord]>,
    config: &TrainConfig,
    mut on_log: impl FnMut(&TrainLogRecord),
) -> Result<TrainOutcome, RlError> {
    config.ppo.validate()?;
    config.source.validate(config.task)?;
    if records.is_empty() {
        return Err(RlError::Config("training set is empty".into()));
    }
    if config.episode_len == 0 {
        return Err(RlError::Config("episode_len must be >= 1".into()));
    }
    let seed = config.ppo.seed;
    let mut init_rng = stream_rng(seed, Stream::Init);
    let mut pref_rng = stream_rng(seed, Stream::Preference);
    let mut action_rng = stream_rng(seed, Stream::Action);
    let mut window_rng = stream_rng(seed, Stream::Window);
    let mut batch_rng = stream_rng(seed, Stream::Minibatch);

    let (input, training) = match &config.source {
        PreferenceSource::Fixed { preference } => (
            PreferenceInput::none(),
            TrainingPreference::Fixed {
                preference: *preference,
            },
        ),
        PreferenceSource::Sampled { alpha, beta } => (
            PreferenceInput::from_training(config.task, alpha, beta.as_ref())?,
            TrainingPreference::Sampled {
                alpha: alpha.clone(),
                beta: beta.clone(),
            },
        ),
    };
    let mut agent = Agent::new(
        config.task,
        topology.name(),
        config.model,
        input,
        training,
        &mut init_rng,
    )?;
    let mut learner = PpoLearner::new(&agent.net, &config.ppo);
    let mut env = NetworkEnv::new(topology.clone(), env_config.clone())?;
    let mut storage = Storage::new();
    let mut log = Vec::with_capacity(config.ppo.iterations);
    let mut step_rewards = Vec::new();
    let mut episode: Option<Episode> = None;
    let pm = config.task == Task::PowerManagement;

    for iter in 0..config.ppo.iterations {
        let mut alphas = Vec::new();
        let mut betas = Vec::new();
        while storage.len() < config.ppo.update_interval {
            let ep = match &mut episode {
                Some(ep) => ep,
                None => {
                    let len = config.episode_len.min(records.len());
                    let start = window_rng.random_range(0..=records.len() - len);
                    let pref = config.source.draw(&mut pref_rng)?;
                    env.reset(records[start].deployment.clone())?;
                    alphas.push(pref.alpha);
                    betas.extend(pref.beta);
                    episode.insert(Episode {
                        start,
                        step: 0,
                        len,
                        pref,
                    })
                }
            };
            let rec = &records[ep.start + ep.step];
            let state = agent.state(&env, &rec.requests, ep.pref)?.ok_or_else(|| {
                RlError::Config(format!("record t={} has no live request", rec.t))
            })?;
            let (action, raw_value) = agent.act_sample(&state, &mut action_rng)?;
            let value = learner.value_to_return(raw_value);
            let m = env.step(&action.to_matrix(env.topology().len())?, &rec.requests)?;
            let r = reward(config.task, &m, env_config.sla_ms, ep.pref)?;
            ep.step += 1;
            let done = ep.step == ep.len;
            // The task itself never terminates; a window end is a cut, so
            // its TD target bootstraps from the state the next record gives.
            let truncated_value = match records.get(ep.start + ep.step) {
                Some(next) if done => match agent.state(&env, &next.requests, ep.pref)? {
                    Some(s) => Some(learner.value_to_return(agent.net.evaluate(&s)?.1)),
                    None => None,
                },
                _ => None,
            };
            step_rewards.push(r);
            storage.push(Transition {
                state,
                classes: std::sync::Arc::new(action.classes),
                log_prob: action.log_prob,
                reward: r,
                value,
                done,
                truncated_value,
            });
            if done {
                episode = None;
            }
        }
        if let Some(ep) = &episode {
            let rec = &records[ep.start + ep.step];
            if let Some(next) = agent.state(&env, &rec.requests, ep.pref)? {
                storage.bootstrap_value = learner.value_to_return(agent.net.evaluate(&next)?.1);
            }
        }

        let mean_reward = storage.mean_reward();
        let last_good = agent.clone();
        let report = match ppo_update(
            &mut storage,
            &mut agent.net,
            &mut learner,
            &config.ppo,
            &mut batch_rng,
        ) {
            Ok(r) => r,
            Err(RlError::Neural(NeuralError::NonFinite(op))) => {
                return Err(RlError::Diverged {
                    iter,
                    reason: format!("non-finite value in {op}"),
                    last_good: Box::new(last_good),
                })
            }
            Err(e) => return Err(e),
        };

        let val_reward = match (validation, config.source.validation_preference()) {
            (Some(val), Some(pref))
                if config.validate_every > 0 && (iter + 1) % config.validate_every == 0 =>
            {
                let report = eval_static(&agent, topology, env_config, val, pref)
                    .map_err(|e| RlError::Config(format!("validation failed: {e}")))?;
                Some(report.mean_reward)
            }
            _ => None,
        };
        let record = TrainLogRecord {
            iter,
            mean_reward,
            actor_loss: report.actor_loss,
            critic_loss: report.critic_loss,
            entropy: report.entropy,
            alpha_sampled: alphas,
            beta_sampled: pm.then_some(betas),
            val_reward,
        };
        on_log(&record);
        log.push(record);
    }
    Ok(TrainOutcome {
        agent,
        log,
        step_rewards,
    })
}
