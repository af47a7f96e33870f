use serde::{Deserialize, Serialize};

use super::{Deployment, ServiceRequest, SimError, Topology, VnfType};

/// A chain-respecting route: the node sequence plus which node serves each
/// chain element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfcPath {
    pub nodes: Vec<usize>,
    /// `(type, position in nodes)` for every chain element, in chain order.
    pub serving: Vec<(VnfType, usize)>,
}

impl SfcPath {
    pub fn serving_nodes(&self) -> impl Iterator<Item = (VnfType, usize)> + '_ {
        self.serving.iter().map(|&(ty, pos)| (ty, self.nodes[pos]))
    }

    pub fn contains(&self, node: usize) -> bool {
        self.nodes.contains(&node)
    }
}

/// ζ(p) = Σ e(n_{i-1}, n_i) over consecutive hops.
pub fn path_delay(topology: &Topology, path: &SfcPath) -> Result<f64, SimError> {
    path.nodes.windows(2).try_fold(0.0, |acc, w| {
        topology
            .delay(w[0], w[1])
            .map(|d| acc + d)
            .ok_or(SimError::MissingEdge { a: w[0], b: w[1] })
    })
}

/// All-pairs shortest delays over the live subgraph, with next-hop table for
/// path reconstruction.
#[derive(Debug, Clone)]
pub struct Router {
    n: usize,
    dist: Vec<f64>,
    next: Vec<usize>,
    up: Vec<bool>,
}

impl Router {
    pub fn new(topology: &Topology) -> Self {
        let n = topology.len();
        let mut dist = vec![f64::INFINITY; n * n];
        let mut next = vec![usize::MAX; n * n];
        let up: Vec<bool> = (0..n).map(|i| topology.is_up(i)).collect();
        for i in 0..n {
            if !up[i] {
                continue;
            }
            dist[i * n + i] = 0.0;
            next[i * n + i] = i;
            for (j, d) in topology.neighbors(i) {
                if up[j] {
                    dist[i * n + j] = d;
                    next[i * n + j] = j;
                }
            }
        }
        for k in 0..n {
            if !up[k] {
                continue;
            }
            for i in 0..n {
                let dik = dist[i * n + k];
                if !dik.is_finite() {
                    continue;
                }
                for j in 0..n {
                    let cand = dik + dist[k * n + j];
                    if cand < dist[i * n + j] {
                        dist[i * n + j] = cand;
                        next[i * n + j] = next[i * n + k];
                    }
                }
            }
        }
        Self { n, dist, next, up }
    }

    /// Shortest live delay between two nodes, `INFINITY` when unreachable.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.n + b]
    }

    /// Node sequence of the shortest live path, inclusive of both ends.
    pub fn shortest_path(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        if !self.distance(a, b).is_finite() {
            return None;
        }
        let mut path = vec![a];
        let mut cur = a;
        while cur != b {
            cur = self.next[cur * self.n + b];
            path.push(cur);
        }
        Some(path)
    }

    /// Greedy chain router: visit the nearest live host of each chain element
    /// in order, then the destination. Ties go to the lowest node id.
    pub fn route(
        &self,
        deployment: &Deployment,
        request: &ServiceRequest,
    ) -> Result<SfcPath, SimError> {
        for node in [request.src, request.dst] {
            if node >= self.n {
                return Err(SimError::UnknownNode(node));
            }
            if !self.up[node] {
                return Err(SimError::NodeDown(node));
            }
        }
        let mut nodes = vec![request.src];
        let mut serving = Vec::with_capacity(request.service.chain().len());
        let mut cur = request.src;
        for &ty in request.service.chain() {
            let mut best: Option<(f64, usize)> = None;
            for host in 0..self.n {
                if !self.up[host] || deployment.get(host, ty) == 0 {
                    continue;
                }
                let d = self.distance(cur, host);
                if d.is_finite() && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, host));
                }
            }
            let (_, host) = best.ok_or(SimError::Unroutable(ty))?;
            self.extend(&mut nodes, cur, host);
            serving.push((ty, nodes.len() - 1));
            cur = host;
        }
        if !self.distance(cur, request.dst).is_finite() {
            return Err(SimError::Disconnected {
                a: cur,
                b: request.dst,
            });
        }
        self.extend(&mut nodes, cur, request.dst);
        Ok(SfcPath { nodes, serving })
    }

    fn extend(&self, nodes: &mut Vec<usize>, from: usize, to: usize) {
        if from == to {
            return;
        }
        let seg = self
            .shortest_path(from, to)
            .expect("reachability checked by caller");
        nodes.extend_from_slice(&seg[1..]);
    }
}

/// One-shot convenience over [`Router::route`].
pub fn route_sfc(
    topology: &Topology,
    deployment: &Deployment,
    request: &ServiceRequest,
) -> Result<SfcPath, SimError> {
    Router::new(topology).route(deployment, request)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Edge, Node, NodeStatus, ServiceType};

    fn line() -> Topology {
        let nodes = (0..3)
            .map(|id| Node {
                id,
                cpu_capacity: 100.0,
                status: NodeStatus::Up,
            })
            .collect();
        let edges = vec![
            Edge {
                i: 0,
                j: 1,
                delay_ms: 2.0,
            },
            Edge {
                i: 1,
                j: 2,
                delay_ms: 3.0,
            },
        ];
        Topology::new("line", nodes, edges).unwrap()
    }

    fn full_deployment(n: usize) -> Deployment {
        Deployment::from_rows(vec![vec![1; 5]; n]).unwrap()
    }

    #[test]
    fn line_path_delay() {
        let topo = line();
        let path = SfcPath {
            nodes: vec![0, 1, 2],
            serving: vec![],
        };
        assert_eq!(path_delay(&topo, &path).unwrap(), 5.0);
        let single = SfcPath {
            nodes: vec![0],
            serving: vec![],
        };
        assert_eq!(path_delay(&topo, &single).unwrap(), 0.0);
        let broken = SfcPath {
            nodes: vec![0, 2],
            serving: vec![],
        };
        assert!(matches!(
            path_delay(&topo, &broken),
            Err(SimError::MissingEdge { a: 0, b: 2 })
        ));
    }

    #[test]
    fn unroutable_when_type_missing() {
        let topo = line();
        let mut dep = Deployment::zeros(3);
        dep.set(1, VnfType::Nat, 1);
        dep.set(1, VnfType::Firewall, 1);
        let req = ServiceRequest::new(0, 2, 10.0, ServiceType::NatFirewallIds);
        assert!(matches!(
            route_sfc(&topo, &dep, &req),
            Err(SimError::Unroutable(VnfType::Ids))
        ));
    }

    #[test]
    fn down_endpoint_rejected() {
        let mut topo = line();
        topo.set_status(2, NodeStatus::Down).unwrap();
        let req = ServiceRequest::new(0, 2, 10.0, ServiceType::NatProxy);
        assert!(matches!(
            route_sfc(&topo, &full_deployment(3), &req),
            Err(SimError::NodeDown(2))
        ));
    }

    #[test]
    fn co_located_chain_collapses_hops() {
        let topo = line();
        let req = ServiceRequest::new(0, 2, 10.0, ServiceType::NatFirewallWanoIds);
        let path = route_sfc(&topo, &full_deployment(3), &req).unwrap();
        assert_eq!(path.nodes, vec![0, 1, 2]);
        assert!(path.serving_nodes().all(|(_, n)| n == 0));
    }

    #[test]
    fn tie_goes_to_lowest_id() {
        // star: 0 in the middle, 1 and 2 at equal distance
        let nodes = (0..4)
            .map(|id| Node {
                id,
                cpu_capacity: 100.0,
                status: NodeStatus::Up,
            })
            .collect();
        let edges = vec![
            Edge {
                i: 0,
                j: 1,
                delay_ms: 1.0,
            },
            Edge {
                i: 0,
                j: 2,
                delay_ms: 1.0,
            },
            Edge {
                i: 0,
                j: 3,
                delay_ms: 1.0,
            },
        ];
        let topo = Topology::new("star", nodes, edges).unwrap();
        let mut dep = Deployment::zeros(4);
        for host in [1, 2] {
            dep.set(host, VnfType::Nat, 1);
            dep.set(host, VnfType::Proxy, 1);
        }
        let req = ServiceRequest::new(0, 3, 10.0, ServiceType::NatProxy);
        let path = route_sfc(&topo, &dep, &req).unwrap();
        assert_eq!(path.nodes, vec![0, 1, 0, 3]);
    }
}
