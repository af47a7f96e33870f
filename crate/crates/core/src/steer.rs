//! Transport-independent steering session: a live rollout that accepts
//! queued operator controls and emits one telemetry frame per tick.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::datagen::DatasetRecord;
use crate::eval::{EvalError, LiveRollout, NodeSnapshot};
use crate::rl::{Agent, Preference};
use crate::sim::{EnvConfig, NodeStatus, Topology};

/// Wire protocol version carried by every outgoing message.
pub const PROTOCOL_VERSION: u32 = 1;

/// Operator control: `{"kind": ..., "payload": {...}}`; the payload is
/// omitted for pause, resume and reset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum ControlMessage {
    SetPreference {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
    },
    NodeDown {
        node: usize,
    },
    NodeUp {
        node: usize,
    },
    Pause,
    Resume,
    Reset,
}

/// Everything the server sends, tagged by `type`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Ack(Ack),
    Telemetry(TelemetryFrame),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub version: u32,
    /// 1-based and strictly consecutive within a session, resets included.
    pub tick: u64,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Normalized preference coordinates the agent was fed this tick.
    pub preference_input: Vec<f64>,
    pub slav: f64,
    pub vnf_total: u64,
    pub power_total: f64,
    pub per_node: Vec<NodeSnapshot>,
    /// Set on the last frame of a session that hit an environment fault.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Reply to a control message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub version: u32,
    pub ok: bool,
    /// Tick of the last emitted frame when the control was accepted; the
    /// control is reflected from the following tick on.
    pub tick: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub version: u32,
    pub id: String,
    pub checkpoint: String,
    pub tick: u64,
    pub running: bool,
    pub ended: bool,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub task: String,
    pub topology: String,
}

#[derive(Debug, thiserror::Error)]
pub enum SteerError {
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("invalid control: {0}")]
    InvalidControl(String),
    #[error("session has ended")]
    Ended,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug)]
pub struct Session {
    id: String,
    checkpoint: String,
    rollout: LiveRollout,
    /// Frames emitted so far; unlike the rollout's own counter it survives
    /// resets.
    ticks: u64,
    running: bool,
    ended: bool,
    queue: VecDeque<ControlMessage>,
}

impl Session {
    /// New session, paused at tick 0.
    pub fn new(
        id: impl Into<String>,
        checkpoint: impl Into<String>,
        agent: Arc<Agent>,
        topology: &Topology,
        env_config: &EnvConfig,
        records: Arc<Vec<DatasetRecord>>,
        pref: Preference,
    ) -> Result<Self, SteerError> {
        let rollout = LiveRollout::new(agent, topology, env_config, records, pref)?;
        Ok(Self {
            id: id.into(),
            checkpoint: checkpoint.into(),
            rollout,
            ticks: 0,
            running: false,
            ended: false,
            queue: VecDeque::new(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn is_running(&self) -> bool {
        self.running && !self.ended
    }

    pub fn is_ended(&self) -> bool {
        self.ended
    }

    pub fn state(&self) -> SessionState {
        let pref = self.rollout.preference();
        SessionState {
            version: PROTOCOL_VERSION,
            id: self.id.clone(),
            checkpoint: self.checkpoint.clone(),
            tick: self.ticks,
            running: self.is_running(),
            ended: self.ended,
            alpha: pref.alpha,
            beta: pref.beta,
            task: self.rollout.agent().task.to_string(),
            topology: self.rollout.env().topology().name().to_string(),
        }
    }

    /// Validates and queues a control; it is applied at the next tick boundary.
    pub fn apply_control(&mut self, msg: ControlMessage) -> Result<Ack, SteerError> {
        if self.ended {
            return Err(SteerError::Ended);
        }
        let n = self.rollout.env().topology().len();
        match &msg {
            ControlMessage::NodeDown { node } | ControlMessage::NodeUp { node } if *node >= n => {
                return Err(SteerError::UnknownNode(*node));
            }
            ControlMessage::SetPreference { alpha, beta } => {
                Preference::new(*alpha, *beta)
                    .check_task(self.rollout.agent().task)
                    .map_err(|e| SteerError::InvalidControl(e.to_string()))?;
            }
            _ => {}
        }
        self.queue.push_back(msg);
        Ok(Ack {
            version: PROTOCOL_VERSION,
            ok: true,
            tick: self.ticks,
            error: None,
        })
    }

    fn drain(&mut self) -> Result<(), SteerError> {
        while let Some(msg) = self.queue.pop_front() {
            match msg {
                ControlMessage::SetPreference { alpha, beta } => {
                    self.rollout.set_preference(Preference::new(alpha, beta))?
                }
                ControlMessage::NodeDown { node } => {
                    self.rollout.set_node_status(node, NodeStatus::Down)?
                }
                ControlMessage::NodeUp { node } => {
                    self.rollout.set_node_status(node, NodeStatus::Up)?
                }
                ControlMessage::Pause => self.running = false,
                ControlMessage::Resume => self.running = true,
                ControlMessage::Reset => self.rollout.reset()?,
            }
        }
        Ok(())
    }

    /// Applies queued controls, then advances one step if running.
    pub fn tick(&mut self) -> Option<TelemetryFrame> {
        if self.ended {
            return None;
        }
        let result = self.drain().and_then(|()| {
            if !self.running {
                return Ok(None);
            }
            let input = self
                .rollout
                .agent()
                .input
                .encode(self.rollout.preference())
                .map_err(|e| SteerError::InvalidControl(e.to_string()))?;
            Ok(Some((self.rollout.step()?, input)))
        });
        match result {
            Ok(None) => None,
            Ok(Some((step, preference_input))) => {
                self.ticks += 1;
                Some(TelemetryFrame {
                    version: PROTOCOL_VERSION,
                    tick: self.ticks,
                    alpha: step.alpha,
                    beta: step.beta,
                    preference_input,
                    slav: step.slav,
                    vnf_total: step.vnf_total,
                    power_total: step.power_total,
                    per_node: step.nodes,
                    error: None,
                })
            }
            Err(e) => {
                self.ended = true;
                self.ticks += 1;
                let pref = self.rollout.preference();
                Some(TelemetryFrame {
                    version: PROTOCOL_VERSION,
                    tick: self.ticks,
                    alpha: pref.alpha,
                    beta: pref.beta,
                    preference_input: Vec::new(),
                    slav: 0.0,
                    vnf_total: 0,
                    power_total: 0.0,
                    per_node: Vec::new(),
                    error: Some(e.to_string()),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn control_json_shapes() {
        let m: ControlMessage =
            serde_json::from_str(r#"{"kind":"set_preference","payload":{"alpha":0.03}}"#).unwrap();
        assert_eq!(
            m,
            ControlMessage::SetPreference {
                alpha: 0.03,
                beta: None
            }
        );
        let m: ControlMessage =
            serde_json::from_str(r#"{"kind":"node_down","payload":{"node":3}}"#).unwrap();
        assert_eq!(m, ControlMessage::NodeDown { node: 3 });
        assert_eq!(
            serde_json::to_string(&ControlMessage::Pause).unwrap(),
            r#"{"kind":"pause"}"#
        );
        assert_eq!(
            serde_json::from_str::<ControlMessage>(r#"{"kind":"resume"}"#).unwrap(),
            ControlMessage::Resume
        );
        assert!(serde_json::from_str::<ControlMessage>(r#"{"kind":"explode"}"#).is_err());
        assert!(serde_json::from_str::<ControlMessage>(r#"{"kind":"node_up"}"#).is_err());
        let ack = ServerMessage::Ack(Ack {
            version: 1,
            ok: true,
            tick: 4,
            error: None,
        });
        assert_eq!(
            serde_json::to_string(&ack).unwrap(),
            r#"{"type":"ack","version":1,"ok":true,"tick":4}"#
        );
    }
}
