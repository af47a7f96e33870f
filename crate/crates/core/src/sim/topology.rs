use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;

/// Operational status of a server node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    #[default]
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    /// Compute capacity in abstract bandwidth units.
    pub cpu_capacity: f64,
    #[serde(default, skip_serializing_if = "is_up")]
    pub status: NodeStatus,
}

fn is_up(s: &NodeStatus) -> bool {
    *s == NodeStatus::Up
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub delay_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TopologyFile {
    #[serde(default)]
    name: String,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

/// Undirected server graph with per-edge delays and per-node status.
///
/// Node ids are the contiguous range `0..n`; the delay matrix is stored densely
/// since the topologies of interest have a few dozen nodes at most.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    name: String,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    delay: Vec<Option<f64>>,
}

impl Topology {
    pub fn new(
        name: impl Into<String>,
        nodes: Vec<Node>,
        edges: Vec<Edge>,
    ) -> Result<Self, SimError> {
        let n = nodes.len();
        if n < 2 {
            return Err(SimError::InvalidTopology("need at least two nodes".into()));
        }
        for (idx, node) in nodes.iter().enumerate() {
            if node.id != idx {
                return Err(SimError::InvalidTopology(format!(
                    "node ids must be contiguous from 0, found id {} at position {idx}",
                    node.id
                )));
            }
            if !(node.cpu_capacity > 0.0) || !node.cpu_capacity.is_finite() {
                return Err(SimError::Config(format!(
                    "node {idx}: cpu_capacity must be positive"
                )));
            }
        }
        let mut delay = vec![None; n * n];
        for e in &edges {
            if e.i >= n || e.j >= n {
                return Err(SimError::InvalidTopology(format!(
                    "edge ({}, {}) references a missing node",
                    e.i, e.j
                )));
            }
            if e.i == e.j {
                return Err(SimError::InvalidTopology(format!(
                    "self-edge at node {}",
                    e.i
                )));
            }
            if !(e.delay_ms > 0.0) || !e.delay_ms.is_finite() {
                return Err(SimError::InvalidTopology(format!(
                    "edge ({}, {}) has non-positive delay",
                    e.i, e.j
                )));
            }
            if delay[e.i * n + e.j].is_some() {
                return Err(SimError::InvalidTopology(format!(
                    "duplicate edge ({}, {})",
                    e.i, e.j
                )));
            }
            delay[e.i * n + e.j] = Some(e.delay_ms);
            delay[e.j * n + e.i] = Some(e.delay_ms);
        }
        let topo = Self {
            name: name.into(),
            nodes,
            edges,
            delay,
        };
        if !topo.connected_ignoring_status() {
            return Err(SimError::InvalidTopology("graph is not connected".into()));
        }
        Ok(topo)
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let file: TopologyFile =
            serde_json::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
        Self::new(file.name, file.nodes, file.edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        let mut topo = Self::from_json(&text)?;
        if topo.name.is_empty() {
            topo.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(topo)
    }

    pub fn to_json(&self) -> String {
        let file = TopologyFile {
            name: self.name.clone(),
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
        };
        serde_json::to_string_pretty(&file).expect("topology serializes")
    }

    /// Twelve-node Internet2 backbone.
    pub fn internet2() -> Self {
        Self::from_json(include_str!("../../fixtures/internet2.json"))
            .expect("internet2 fixture is valid")
    }

    /// Mobile-edge-computing topology.
    pub fn mec() -> Self {
        Self::from_json(include_str!("../../fixtures/mec.json")).expect("mec fixture is valid")
    }

    /// Small five-node graph for fast experiments and tests.
    pub fn toy() -> Self {
        Self::from_json(include_str!("../../fixtures/toy.json")).expect("toy fixture is valid")
    }

    /// Resolves a built-in fixture name or reads a topology file.
    pub fn resolve(name_or_path: &str) -> Result<Self, SimError> {
        match name_or_path {
            "internet2" => Ok(Self::internet2()),
            "mec" => Ok(Self::mec()),
            "toy" => Ok(Self::toy()),
            path => Self::load(path),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge delay `e(a, b)`, ignoring node status.
    pub fn delay(&self, a: usize, b: usize) -> Option<f64> {
        let n = self.len();
        if a >= n || b >= n {
            return None;
        }
        self.delay[a * n + b]
    }

    /// Edge delay if both endpoints are up.
    pub fn live_delay(&self, a: usize, b: usize) -> Option<f64> {
        if self.is_up(a) && self.is_up(b) {
            self.delay(a, b)
        } else {
            None
        }
    }

    pub fn neighbors(&self, a: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let n = self.len();
        (0..n).filter_map(move |b| self.delay[a * n + b].map(|d| (b, d)))
    }

    pub fn is_up(&self, node: usize) -> bool {
        self.nodes
            .get(node)
            .is_some_and(|n| n.status == NodeStatus::Up)
    }

    pub fn status(&self, node: usize) -> Option<NodeStatus> {
        self.nodes.get(node).map(|n| n.status)
    }

    pub fn set_status(&mut self, node: usize, status: NodeStatus) -> Result<(), SimError> {
        let n = self
            .nodes
            .get_mut(node)
            .ok_or(SimError::UnknownNode(node))?;
        n.status = status;
        Ok(())
    }

    pub fn cpu_capacity(&self, node: usize) -> Option<f64> {
        self.nodes.get(node).map(|n| n.cpu_capacity)
    }

    pub fn up_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.is_up(i))
    }

    fn connected_ignoring_status(&self) -> bool {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(a) = stack.pop() {
            for (b, _) in self.neighbors(a) {
                if !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}
