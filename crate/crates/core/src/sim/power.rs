use serde::{Deserialize, Serialize};

use super::{Deployment, SimError, Topology};

/// Linear CPU-load power model per server.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub p_idle: f64,
    pub p_max: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            p_idle: 100.0,
            p_max: 200.0,
        }
    }
}

impl PowerModel {
    pub fn new(p_idle: f64, p_max: f64) -> Result<Self, SimError> {
        if !(0.0..=p_max).contains(&p_idle) || !p_max.is_finite() {
            return Err(SimError::Config(format!(
                "power model needs 0 <= p_idle <= p_max, got {p_idle}, {p_max}"
            )));
        }
        Ok(Self { p_idle, p_max })
    }

    /// Watts drawn by a node at the given assigned load. Down or empty nodes
    /// are powered off.
    pub fn node_power(
        &self,
        topology: &Topology,
        deployment: &Deployment,
        node: usize,
        assigned_load: f64,
    ) -> Result<f64, SimError> {
        let capacity = topology
            .cpu_capacity(node)
            .ok_or(SimError::UnknownNode(node))?;
        if !(capacity > 0.0) {
            return Err(SimError::Config(format!(
                "node {node}: cpu_capacity must be positive"
            )));
        }
        if !topology.is_up(node) || deployment.node_total(node) == 0 {
            return Ok(0.0);
        }
        let ratio = (assigned_load.max(0.0) / capacity).min(1.0);
        Ok(self.p_idle + (self.p_max - self.p_idle) * ratio)
    }

    /// Per-node watts for a full load assignment.
    pub fn network_power(
        &self,
        topology: &Topology,
        deployment: &Deployment,
        loads: &[f64],
    ) -> Result<Vec<f64>, SimError> {
        (0..topology.len())
            .map(|n| self.node_power(topology, deployment, n, loads[n]))
            .collect()
    }
}

/// Free function form of [`PowerModel::node_power`].
pub fn node_power(
    model: &PowerModel,
    topology: &Topology,
    deployment: &Deployment,
    node: usize,
    assigned_load: f64,
) -> Result<f64, SimError> {
    model.node_power(topology, deployment, node, assigned_load)
}
