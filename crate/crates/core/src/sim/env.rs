use serde::{Deserialize, Serialize};

use super::{
    apply_action, path_delay, total_vnf_count, ActionMatrix, Deployment, NodeStatus, PowerModel,
    Router, ServiceRequest, SfcPath, SimError, Topology, VnfCatalog,
};

/// Static environment settings shared by training, evaluation and serving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    /// ζ_SLA in milliseconds.
    pub sla_ms: f64,
    /// Unroutable requests are charged this multiple of ζ_SLA as their delay.
    pub unroutable_penalty: f64,
    pub power: PowerModel,
    pub catalog: VnfCatalog,
}

impl EnvConfig {
    pub fn new(sla_ms: f64) -> Self {
        Self {
            sla_ms,
            unroutable_penalty: 2.0,
            power: PowerModel::default(),
            catalog: VnfCatalog::default(),
        }
    }
}

/// Routing result for one request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteOutcome {
    pub path: Option<SfcPath>,
    /// ζ(p_q), or the penalty delay when unroutable.
    pub delay_ms: f64,
}

impl RouteOutcome {
    pub fn violated(&self, sla_ms: f64) -> bool {
        self.delay_ms > sla_ms
    }
}

/// Everything observable after routing one request set on a deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub routes: Vec<RouteOutcome>,
    /// Requests dropped because an endpoint was down.
    pub skipped: usize,
    pub vnf_total: u64,
    /// Per-node watts.
    pub node_power: Vec<f64>,
    /// Σ W(n) / p_max.
    pub power_total: f64,
    pub violations: usize,
}

impl Measurement {
    /// (ζ(p_q), ζ_SLA) pairs for the reward.
    pub fn delay_pairs(&self, sla_ms: f64) -> Vec<(f64, f64)> {
        self.routes.iter().map(|r| (r.delay_ms, sla_ms)).collect()
    }

    pub fn slav(&self) -> f64 {
        if self.routes.is_empty() {
            0.0
        } else {
            self.violations as f64 / self.routes.len() as f64
        }
    }
}

/// Mutable network state: topology status plus current deployment.
#[derive(Debug, Clone)]
pub struct NetworkEnv {
    topology: Topology,
    config: EnvConfig,
    deployment: Deployment,
    router: Router,
}

impl NetworkEnv {
    pub fn new(topology: Topology, config: EnvConfig) -> Result<Self, SimError> {
        if !(config.sla_ms > 0.0) {
            return Err(SimError::Config("sla_ms must be positive".into()));
        }
        let router = Router::new(&topology);
        let deployment = Deployment::zeros(topology.len());
        Ok(Self {
            topology,
            config,
            deployment,
            router,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn deployment(&self) -> &Deployment {
        &self.deployment
    }

    pub fn router(&self) -> &Router {
        &self.router
    }

    pub fn reset(&mut self, deployment: Deployment) -> Result<(), SimError> {
        if deployment.nodes() != self.topology.len() {
            return Err(SimError::Shape(format!(
                "deployment has {} nodes, topology {}",
                deployment.nodes(),
                self.topology.len()
            )));
        }
        self.deployment = deployment;
        self.deployment.enforce_status(&self.topology);
        Ok(())
    }

    pub fn set_node_status(&mut self, node: usize, status: NodeStatus) -> Result<(), SimError> {
        self.topology.set_status(node, status)?;
        self.deployment.enforce_status(&self.topology);
        self.router = Router::new(&self.topology);
        Ok(())
    }

    /// Requests whose endpoints are both up.
    pub fn live_requests<'a>(&self, requests: &'a [ServiceRequest]) -> Vec<&'a ServiceRequest> {
        requests
            .iter()
            .filter(|r| r.is_live(&self.topology))
            .collect()
    }

    pub fn apply(&mut self, action: &ActionMatrix) -> Result<(), SimError> {
        self.deployment = apply_action(&self.deployment, action, &self.topology)?;
        Ok(())
    }

    /// Applies the action, then measures the request set on the new deployment.
    pub fn step(
        &mut self,
        action: &ActionMatrix,
        requests: &[ServiceRequest],
    ) -> Result<Measurement, SimError> {
        self.apply(action)?;
        self.measure(requests)
    }

    /// Routes every live request and evaluates delays, loads and power.
    pub fn measure(&self, requests: &[ServiceRequest]) -> Result<Measurement, SimError> {
        let sla = self.config.sla_ms;
        let mut loads = vec![0.0; self.topology.len()];
        let mut routes = Vec::with_capacity(requests.len());
        let mut skipped = 0;
        for req in requests {
            if !req.is_live(&self.topology) {
                skipped += 1;
                continue;
            }
            match self.router.route(&self.deployment, req) {
                Ok(path) => {
                    let delay_ms = path_delay(&self.topology, &path)?;
                    for (_, node) in path.serving_nodes() {
                        loads[node] += req.bandwidth;
                    }
                    routes.push(RouteOutcome {
                        path: Some(path),
                        delay_ms,
                    });
                }
                Err(SimError::Unroutable(_)) | Err(SimError::Disconnected { .. }) => {
                    routes.push(RouteOutcome {
                        path: None,
                        delay_ms: self.config.unroutable_penalty * sla,
                    });
                }
                Err(e) => return Err(e),
            }
        }
        let node_power =
            self.config
                .power
                .network_power(&self.topology, &self.deployment, &loads)?;
        let power_total = node_power.iter().sum::<f64>() / self.config.power.p_max;
        let violations = routes.iter().filter(|r| r.violated(sla)).count();
        Ok(Measurement {
            routes,
            skipped,
            vnf_total: total_vnf_count(&self.deployment),
            node_power,
            power_total,
            violations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{ServiceType, VnfType};

    fn env() -> NetworkEnv {
        NetworkEnv::new(Topology::toy(), EnvConfig::new(10.0)).unwrap()
    }

    #[test]
    fn unroutable_gets_penalty() {
        let env = env();
        let req = ServiceRequest::new(0, 3, 50.0, ServiceType::NatProxy);
        let m = env.measure(&[req]).unwrap();
        assert_eq!(m.routes[0].delay_ms, 20.0);
        assert_eq!(m.violations, 1);
        assert_eq!(m.power_total, 0.0);
    }

    #[test]
    fn loads_follow_serving_nodes() {
        let mut env = env();
        let mut dep = Deployment::zeros(5);
        dep.set(1, VnfType::Nat, 1);
        dep.set(1, VnfType::Proxy, 1);
        env.reset(dep).unwrap();
        let cap = env.topology().cpu_capacity(1).unwrap();
        let req = ServiceRequest::new(0, 2, 0.25 * cap, ServiceType::NatProxy);
        let m = env.measure(&[req]).unwrap();
        // NAT and proxy both at node 1: load = 2 * bw = half capacity.
        assert_eq!(m.node_power[1], 150.0);
        assert_eq!(m.power_total, 0.75);
        assert_eq!(m.routes[0].path.as_ref().unwrap().nodes, vec![0, 1, 2]);
    }

    #[test]
    fn node_down_zeroes_and_reroutes() {
        let mut env = env();
        env.reset(Deployment::from_rows(vec![vec![1; 5]; 5]).unwrap())
            .unwrap();
        env.set_node_status(2, NodeStatus::Down).unwrap();
        assert_eq!(env.deployment().node_total(2), 0);
        let reqs = [
            ServiceRequest::new(1, 3, 10.0, ServiceType::NatWano),
            ServiceRequest::new(0, 2, 10.0, ServiceType::NatWano),
        ];
        let m = env.measure(&reqs).unwrap();
        assert_eq!(m.skipped, 1);
        assert!(!m.routes[0].path.as_ref().unwrap().contains(2));
    }
}
