//! Rewards, action sampling, rollout storage, PPO and the training driver.

mod action;
mod agent;
mod ppo;
mod reward;
mod storage;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use action::{greedy_classes, sample_action, SampledAction};
pub use agent::{Agent, TrainingPreference};
pub use ppo::{ppo_loss, ppo_update, LossReport, PpoConfig, PpoLearner, RunningStats};
pub use reward::{reward, reward_as, reward_pm};
pub use storage::{compute_gae, Storage, Transition};
pub use train::{train, PreferenceSource, TrainConfig, TrainLogRecord, TrainOutcome};

use crate::encoding::EncodingError;
use crate::neural::NeuralError;
use crate::pref::DistError;
use crate::sim::SimError;

/// Which sub-module the agent plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    /// Reward trades SLA delay against instance count (α).
    #[serde(rename = "as")]
    AutoScaling,
    /// Adds a power term weighted by β.
    #[serde(rename = "pm")]
    PowerManagement,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::AutoScaling => "as",
            Task::PowerManagement => "pm",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = RlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "as" | "auto-scaling" | "autoscaling" => Ok(Task::AutoScaling),
            "pm" | "power-management" | "power" => Ok(Task::PowerManagement),
            _ => Err(RlError::Config(format!(
                "unknown task `{s}` (expected as|pm)"
            ))),
        }
    }
}

/// Preference coefficients in effect for one episode or step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preference {
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl Preference {
    pub fn new(alpha: f64, beta: Option<f64>) -> Self {
        Self { alpha, beta }
    }

    pub fn alpha(alpha: f64) -> Self {
        Self { alpha, beta: None }
    }

    pub fn is_valid(&self) -> bool {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        ok(self.alpha) && self.beta.is_none_or(ok)
    }

    /// Checks the β-iff-PM contract.
    pub fn check_task(&self, task: Task) -> Result<(), RlError> {
        if !self.is_valid() {
            return Err(RlError::Config(format!(
                "preference {self:?} must be finite and >= 0"
            )));
        }
        match (task, self.beta) {
            (Task::AutoScaling, Some(_)) => {
                Err(RlError::Config("β given for an auto-scaling agent".into()))
            }
            (Task::PowerManagement, None) => {
                Err(RlError::Config("power-management agent needs β".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RlError {
    #[error("empty request set")]
    EmptyRequests,
    #[error("empty rollout storage")]
    EmptyStorage,
    #[error("invalid probabilities: {0}")]
    Probabilities(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("training diverged at iteration {iter}: {reason}")]
    Diverged {
        iter: usize,
        reason: String,
        last_good: Box<Agent>,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Dist(#[from] DistError),
}
