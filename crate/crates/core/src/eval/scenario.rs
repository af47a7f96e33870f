use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::datagen::DatasetRecord;
use crate::rl::{reward, Agent, Preference};
use crate::sim::{ActionMatrix, EnvConfig, NetworkEnv, NodeStatus, Topology};

/// One timeline entry; applied before the action of step `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvent {
    pub t: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    SetAlpha { value: f64 },
    SetBeta { value: f64 },
    NodeDown { node: usize },
    NodeUp { node: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub events: Vec<ScenarioEvent>,
}

impl Scenario {
    pub fn validate(&self, topology: &Topology) -> Result<(), EvalError> {
        if self.events.windows(2).any(|w| w[1].t < w[0].t) {
            return Err(EvalError::Scenario(
                "event timestamps must be nondecreasing".into(),
            ));
        }
        for e in &self.events {
            match e.kind {
                EventKind::NodeDown { node } | EventKind::NodeUp { node }
                    if node >= topology.len() =>
                {
                    return Err(EvalError::Scenario(format!(
                        "event at t={} references missing node {node}",
                        e.t
                    )));
                }
                EventKind::SetAlpha { value } | EventKind::SetBeta { value }
                    if !(value >= 0.0 && value.is_finite()) =>
                {
                    return Err(EvalError::Scenario(format!(
                        "event at t={} sets invalid preference {value}",
                        e.t
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        serde_json::from_str(text).map_err(|e| EvalError::Scenario(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| EvalError::Scenario(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Low → high → low α schedule with switches at `t1` and `t2`.
    pub fn alpha_windows(low: f64, high: f64, t1: u64, t2: u64) -> Self {
        Self {
            events: vec![
                ScenarioEvent {
                    t: 0,
                    kind: EventKind::SetAlpha { value: low },
                },
                ScenarioEvent {
                    t: t1,
                    kind: EventKind::SetAlpha { value: high },
                },
                ScenarioEvent {
                    t: t2,
                    kind: EventKind::SetAlpha { value: low },
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSnapshot {
    pub id: usize,
    pub status: NodeStatus,
    pub instance_counts: Vec<u32>,
    pub power: f64,
}

/// Observables after one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStep {
    pub t: u64,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub slav: f64,
    pub vnf_total: u64,
    pub power_total: f64,
    pub reward: f64,
    pub nodes: Vec<NodeSnapshot>,
    /// Node sequences of the routed paths.
    pub paths: Vec<Vec<usize>>,
}

/// Continuous greedy rollout whose preference and node status can be
/// changed between steps. Records are replayed cyclically.
#[derive(Debug, Clone)]
pub struct LiveRollout {
    agent: Arc<Agent>,
    env: NetworkEnv,
    records: Arc<Vec<DatasetRecord>>,
    initial: Preference,
    pref: Preference,
    tick: u64,
}

impl LiveRollout {
    pub fn new(
        agent: Arc<Agent>,
        topology: &Topology,
        env_config: &EnvConfig,
        records: Arc<Vec<DatasetRecord>>,
        pref: Preference,
    ) -> Result<Self, EvalError> {
        if records.is_empty() {
            return Err(EvalError::Empty);
        }
        pref.check_task(agent.task)
            .map_err(|e| EvalError::Incompatible(e.to_string()))?;
        let mut env = NetworkEnv::new(topology.clone(), env_config.clone())?;
        env.reset(records[0].deployment.clone())?;
        Ok(Self {
            agent,
            env,
            records,
            initial: pref,
            pref,
            tick: 0,
        })
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn preference(&self) -> Preference {
        self.pref
    }

    pub fn env(&self) -> &NetworkEnv {
        &self.env
    }

    pub fn agent(&self) -> &Agent {
        &self.agent
    }

    pub fn set_preference(&mut self, pref: Preference) -> Result<(), EvalError> {
        pref.check_task(self.agent.task)
            .map_err(|e| EvalError::Incompatible(e.to_string()))?;
        self.pref = pref;
        Ok(())
    }

    pub fn set_node_status(&mut self, node: usize, status: NodeStatus) -> Result<(), EvalError> {
        Ok(self.env.set_node_status(node, status)?)
    }

    /// Back to tick 0, all nodes up, the first record's deployment and the
    /// initial preference.
    pub fn reset(&mut self) -> Result<(), EvalError> {
        for node in 0..self.env.topology().len() {
            if !self.env.topology().is_up(node) {
                self.env.set_node_status(node, NodeStatus::Up)?;
            }
        }
        self.env.reset(self.records[0].deployment.clone())?;
        self.pref = self.initial;
        self.tick = 0;
        Ok(())
    }

    pub fn apply_event(&mut self, kind: &EventKind) -> Result<(), EvalError> {
        match *kind {
            EventKind::SetAlpha { value } => self.set_preference(Preference {
                alpha: value,
                ..self.pref
            }),
            EventKind::SetBeta { value } => self.set_preference(Preference {
                beta: Some(value),
                ..self.pref
            }),
            EventKind::NodeDown { node } => self.set_node_status(node, NodeStatus::Down),
            EventKind::NodeUp { node } => self.set_node_status(node, NodeStatus::Up),
        }
    }

    /// Greedy action on the current record, then measurement.
    pub fn step(&mut self) -> Result<ScenarioStep, EvalError> {
        let rec = &self.records[(self.tick % self.records.len() as u64) as usize];
        let n = self.env.topology().len();
        let action = match self.agent.state(&self.env, &rec.requests, self.pref)? {
            Some(state) => self.agent.act_greedy(&state)?,
            None => ActionMatrix::keep(n),
        };
        let m = self.env.step(&action, &rec.requests)?;
        let r = reward(self.agent.task, &m, self.env.config().sla_ms, self.pref)?;
        let topo = self.env.topology();
        let dep = self.env.deployment();
        let nodes = (0..n)
            .map(|id| NodeSnapshot {
                id,
                status: topo.status(id).expect("node in range"),
                instance_counts: dep.row(id).to_vec(),
                power: m.node_power[id],
            })
            .collect();
        let step = ScenarioStep {
            t: self.tick,
            alpha: self.pref.alpha,
            beta: self.pref.beta,
            slav: m.slav(),
            vnf_total: m.vnf_total,
            power_total: m.power_total,
            reward: r,
            nodes,
            paths: m
                .routes
                .iter()
                .filter_map(|r| r.path.as_ref().map(|p| p.nodes.clone()))
                .collect(),
        };
        self.tick += 1;
        Ok(step)
    }
}

/// Plays the scenario over `records` (one step per record), applying each
/// event before the action of its step.
pub fn run_scenario(
    agent: Arc<Agent>,
    topology: &Topology,
    env_config: &EnvConfig,
    scenario: &Scenario,
    records: Arc<Vec<DatasetRecord>>,
    initial: Preference,
) -> Result<Vec<ScenarioStep>, EvalError> {
    scenario.validate(topology)?;
    let steps = records.len();
    let mut live = LiveRollout::new(agent, topology, env_config, records, initial)?;
    let mut events = scenario.events.iter().peekable();
    let mut out = Vec::with_capacity(steps);
    for t in 0..steps as u64 {
        while let Some(e) = events.next_if(|e| e.t <= t) {
            live.apply_event(&e.kind)?;
        }
        out.push(live.step()?);
    }
    Ok(out)
}
