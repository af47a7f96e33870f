use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{greedy_classes, sample_action, Preference, RlError, SampledAction, Task};
use crate::encoding::{adjacency, assemble_state, PreferenceInput, SurrogateState};
use crate::neural::{Checkpoint, ModelConfig, NeuralError, PolicyValueNet};
use crate::pref::PreferenceDistribution;
use crate::sim::{ActionMatrix, NetworkEnv, ServiceRequest};

const FORMAT: &str = "prefnet-agent";

/// How the agent's reward preference was chosen during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainingPreference {
    /// Static-preference baseline.
    Fixed { preference: Preference },
    /// Resampled per episode.
    Sampled {
        alpha: PreferenceDistribution,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<PreferenceDistribution>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct AgentMeta {
    format: String,
    task: Task,
    topology: String,
    model: ModelConfig,
    input: PreferenceInput,
    training: TrainingPreference,
}

/// A policy/value network together with the task and preference layout it
/// was trained for.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub task: Task,
    pub topology: String,
    pub input: PreferenceInput,
    pub training: TrainingPreference,
    pub net: PolicyValueNet,
}

impl Agent {
    /// Fresh agent; `model.pref_dims` is taken from `input`.
    pub fn new<R: Rng + ?Sized>(
        task: Task,
        topology: impl Into<String>,
        mut model: ModelConfig,
        input: PreferenceInput,
        training: TrainingPreference,
        rng: &mut R,
    ) -> Result<Self, RlError> {
        model.pref_dims = input.dims();
        if task == Task::AutoScaling && input.beta.is_some() {
            return Err(RlError::Config(
                "auto-scaling agents take no β input".into(),
            ));
        }
        let net = PolicyValueNet::new(model, rng)?;
        Ok(Self {
            task,
            topology: topology.into(),
            input,
            training,
            net,
        })
    }

    /// The preference the agent was trained at, if it never varied.
    pub fn training_preference(&self) -> Option<Preference> {
        match &self.training {
            TrainingPreference::Fixed { preference } => Some(*preference),
            TrainingPreference::Sampled { alpha, beta } => {
                let point = |d: &PreferenceDistribution| match d {
                    PreferenceDistribution::Point(x) => Some(*x),
                    _ => None,
                };
                let a = point(alpha)?;
                let b = match beta {
                    Some(b) => Some(point(b)?),
                    None => None,
                };
                Some(Preference::new(a, b))
            }
        }
    }

    /// Surrogate state over the live requests, or `None` if none are live.
    pub fn state(
        &self,
        env: &NetworkEnv,
        requests: &[ServiceRequest],
        pref: Preference,
    ) -> Result<Option<SurrogateState>, RlError> {
        pref.check_task(self.task)?;
        let live = env.live_requests(requests);
        if live.is_empty() {
            return Ok(None);
        }
        let adj = Arc::new(adjacency(env.topology())?);
        Ok(Some(assemble_state(
            adj,
            &live,
            env.deployment(),
            pref,
            &self.input,
        )?))
    }

    /// Greedy action: argmax per (node, type).
    pub fn act_greedy(&self, state: &SurrogateState) -> Result<ActionMatrix, RlError> {
        let logp = self.net.log_probs(state)?;
        Ok(ActionMatrix::from_classes(
            state.nodes(),
            &greedy_classes(&logp),
        )?)
    }

    /// Stochastic action with its joint log-probability, plus the value estimate.
    pub fn act_sample<R: Rng + ?Sized>(
        &self,
        state: &SurrogateState,
        rng: &mut R,
    ) -> Result<(SampledAction, f64), RlError> {
        let (probs, value) = self.net.evaluate(state)?;
        Ok((sample_action(&probs, rng)?, value))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let meta = AgentMeta {
            format: FORMAT.into(),
            task: self.task,
            topology: self.topology.clone(),
            model: *self.net.config(),
            input: self.input.clone(),
            training: self.training.clone(),
        };
        let metadata = serde_json::to_value(meta).expect("agent metadata serializes");
        Checkpoint::from_params(metadata, self.net.params())
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, RlError> {
        let meta: AgentMeta = serde_json::from_value(ck.metadata.clone())
            .map_err(|e| NeuralError::Checkpoint(format!("agent metadata: {e}")))?;
        if meta.format != FORMAT {
            return Err(NeuralError::Checkpoint(format!(
                "unexpected checkpoint format `{}`",
                meta.format
            ))
            .into());
        }
        if meta.model.pref_dims != meta.input.dims() {
            return Err(NeuralError::Checkpoint(
                "preference layout disagrees with model width".into(),
            )
            .into());
        }
        // initial values are overwritten below
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = PolicyValueNet::new(meta.model, &mut rng)?;
        net.params_mut()
            .load_from(&ck.tensor_map())
            .map_err(NeuralError::Checkpoint)?;
        Ok(Self {
            task: meta.task,
            topology: meta.topology,
            input: meta.input,
            training: meta.training,
            net,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RlError> {
        Ok(self.to_checkpoint().save(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RlError> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}
