use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;

use crate::sim::{Deployment, ServiceRequest, Topology, VnfCatalog, VnfType};

/// Weighted shortest-path betweenness of every live node (Brandes).
pub fn betweenness(topology: &Topology) -> Vec<f64> {
    let n = topology.len();
    let mut cb = vec![0.0; n];
    #[derive(PartialEq)]
    struct Item(f64, usize);
    impl Eq for Item {}
    impl Ord for Item {
        fn cmp(&self, o: &Self) -> Ordering {
            o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
        }
    }
    impl PartialOrd for Item {
        fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
            Some(self.cmp(o))
        }
    }
    for s in topology.up_nodes() {
        let mut stack = Vec::with_capacity(n);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0; n];
        let mut dist = vec![f64::INFINITY; n];
        sigma[s] = 1.0;
        dist[s] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Item(0.0, s));
        let mut done = vec![false; n];
        while let Some(Item(d, v)) = heap.pop() {
            if done[v] {
                continue;
            }
            done[v] = true;
            stack.push(v);
            for (w, e) in topology.neighbors(v) {
                if !topology.is_up(w) {
                    continue;
                }
                let nd = d + e;
                if nd < dist[w] - 1e-12 {
                    dist[w] = nd;
                    sigma[w] = sigma[v];
                    preds[w] = vec![v];
                    heap.push(Item(nd, w));
                } else if (nd - dist[w]).abs() <= 1e-12 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                cb[w] += delta[w];
            }
        }
    }
    cb
}

/// Live nodes by decreasing betweenness, ties by lowest id.
pub fn centrality_ranking(topology: &Topology) -> Vec<usize> {
    let cb = betweenness(topology);
    let mut nodes: Vec<usize> = topology.up_nodes().collect();
    nodes.sort_by(|&a, &b| cb[b].total_cmp(&cb[a]).then(a.cmp(&b)));
    nodes
}

/// Instances of each type needed to carry the requests' aggregate demand.
pub fn required_instances(
    requests: &[ServiceRequest],
    catalog: &VnfCatalog,
) -> [u32; VnfType::COUNT] {
    let mut demand = [0.0; VnfType::COUNT];
    for r in requests {
        for ty in r.service.chain() {
            demand[ty.index()] += r.bandwidth;
        }
    }
    let mut out = [0; VnfType::COUNT];
    for ty in VnfType::ALL {
        out[ty.index()] = (demand[ty.index()] / catalog.capacity(ty)).ceil() as u32;
    }
    out
}

/// Greedy placement: the k-th instance of each type goes to the k-th most
/// central live node (wrapping around).
pub fn greedy_deployment(
    topology: &Topology,
    requests: &[ServiceRequest],
    catalog: &VnfCatalog,
) -> Deployment {
    let mut dep = Deployment::zeros(topology.len());
    let ranking = centrality_ranking(topology);
    if ranking.is_empty() {
        return dep;
    }
    let need = required_instances(requests, catalog);
    for ty in VnfType::ALL {
        for k in 0..need[ty.index()] as usize {
            dep.add(ranking[k % ranking.len()], ty, 1);
        }
    }
    dep
}

/// Moves a fraction of live (node, type) cells by ±1, clamped at zero, then
/// makes sure every type some request needs still has an instance.
pub fn perturb<R: Rng + ?Sized>(
    deployment: &Deployment,
    topology: &Topology,
    requests: &[ServiceRequest],
    fraction: f64,
    rng: &mut R,
) -> Deployment {
    let mut dep = deployment.clone();
    for node in 0..topology.len() {
        for ty in VnfType::ALL {
            // draw for every cell so the stream does not depend on status
            let hit = rng.random_bool(fraction);
            let up = rng.random_bool(0.5);
            if !hit || !topology.is_up(node) {
                continue;
            }
            let c = dep.get(node, ty);
            dep.set(node, ty, if up { c + 1 } else { c.saturating_sub(1) });
        }
    }
    feasibility_guard(&mut dep, topology, requests);
    dep
}

/// Re-adds one instance at the most central live node for any required type
/// that has none.
pub fn feasibility_guard(dep: &mut Deployment, topology: &Topology, requests: &[ServiceRequest]) {
    let ranking = centrality_ranking(topology);
    let Some(&top) = ranking.first() else { return };
    for ty in VnfType::ALL {
        let needed = requests.iter().any(|r| r.service.chain().contains(&ty));
        if needed && dep.type_total(ty) == 0 {
            dep.set(top, ty, 1);
        }
    }
}

/// Greedy placement followed by perturbation.
pub fn init_deployment<R: Rng + ?Sized>(
    topology: &Topology,
    requests: &[ServiceRequest],
    catalog: &VnfCatalog,
    perturb_fraction: f64,
    rng: &mut R,
) -> Deployment {
    let greedy = greedy_deployment(topology, requests, catalog);
    perturb(&greedy, topology, requests, perturb_fraction, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{total_vnf_count, Edge, Node, NodeStatus, ServiceType};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn star() -> Topology {
        let nodes = (0..4)
            .map(|id| Node {
                id,
                cpu_capacity: 100.0,
                status: NodeStatus::Up,
            })
            .collect();
        let edges = (1..4)
            .map(|j| Edge {
                i: 0,
                j,
                delay_ms: 1.0,
            })
            .collect();
        Topology::new("star", nodes, edges).unwrap()
    }

    #[test]
    fn star_center_is_most_central() {
        let cb = betweenness(&star());
        // oracle: the hub lies on all 3·2 ordered leaf-to-leaf paths
        assert_eq!(cb, vec![6.0, 0.0, 0.0, 0.0]);
        assert_eq!(centrality_ranking(&star())[0], 0);
    }

    #[test]
    fn zero_requests_zero_deployment() {
        let topo = Topology::toy();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = init_deployment(&topo, &[], &VnfCatalog::default(), 0.0, &mut rng);
        assert_eq!(total_vnf_count(&d), 0);
    }

    #[test]
    fn demand_rounds_up() {
        let reqs = vec![
            ServiceRequest::new(1, 2, 300.0, ServiceType::NatProxy),
            ServiceRequest::new(2, 3, 250.0, ServiceType::NatWano),
        ];
        let need = required_instances(&reqs, &VnfCatalog::default());
        assert_eq!(need[VnfType::Nat.index()], 2);
        assert_eq!(need[VnfType::Proxy.index()], 1);
        assert_eq!(need[VnfType::Ids.index()], 0);
        let d = greedy_deployment(&star(), &reqs, &VnfCatalog::default());
        assert_eq!(d.get(0, VnfType::Nat), 1);
        assert_eq!(d.type_total(VnfType::Nat), 2);
    }

    #[test]
    fn guard_and_perturbation() {
        let topo = Topology::internet2();
        let reqs = vec![ServiceRequest::new(
            0,
            5,
            50.0,
            ServiceType::NatFirewallWanoIds,
        )];
        let greedy = greedy_deployment(&topo, &reqs, &VnfCatalog::default());
        let mut differ = 0;
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = perturb(&greedy, &topo, &reqs, 0.3, &mut rng);
            for ty in ServiceType::NatFirewallWanoIds.chain() {
                assert!(p.type_total(*ty) > 0);
            }
            differ += (p != greedy) as usize;
        }
        assert!(differ as f64 / 200.0 > 0.99);
    }
}
