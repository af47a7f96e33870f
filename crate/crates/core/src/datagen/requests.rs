use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DatagenError, TrafficPattern};
use crate::sim::{ServiceRequest, ServiceType, Topology};

/// What to do with a timestep whose intensity rounds to zero flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroIntensity {
    #[default]
    Skip,
    MinOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RequestConfig {
    pub bw_lo: f64,
    pub bw_hi: f64,
    /// Requests per unit of total intensity.
    pub flows_per_unit: f64,
    pub zero_intensity: ZeroIntensity,
}

impl Default for RequestConfig {
    fn default() -> Self {
        Self {
            bw_lo: 10.0,
            bw_hi: 100.0,
            flows_per_unit: 1.0,
            zero_intensity: ZeroIntensity::Skip,
        }
    }
}

/// Draws the request set of every timestep; skipped steps are absent.
pub fn gen_requests<R: Rng + ?Sized>(
    pattern: &TrafficPattern,
    topology: &Topology,
    config: &RequestConfig,
    rng: &mut R,
) -> Result<Vec<(u64, Vec<ServiceRequest>)>, DatagenError> {
    if !(config.bw_lo > 0.0 && config.bw_lo <= config.bw_hi) {
        return Err(DatagenError::Config(
            "bandwidth range must satisfy 0 < lo <= hi".into(),
        ));
    }
    let up: Vec<usize> = topology.up_nodes().collect();
    if up.len() < 2 {
        return Err(DatagenError::Config(
            "need at least two live nodes to draw requests".into(),
        ));
    }
    let mut out = Vec::with_capacity(pattern.horizon());
    for t in 0..pattern.horizon() {
        let mut count = (pattern.total(t) * config.flows_per_unit).round() as usize;
        if count == 0 {
            match config.zero_intensity {
                ZeroIntensity::Skip => continue,
                ZeroIntensity::MinOne => count = 1,
            }
        }
        let reqs = (0..count)
            .map(|_| {
                let src = up[rng.random_range(0..up.len())];
                let mut dst = up[rng.random_range(0..up.len() - 1)];
                if dst == src {
                    dst = up[up.len() - 1];
                }
                let bw = if config.bw_lo == config.bw_hi {
                    config.bw_lo
                } else {
                    rng.random_range(config.bw_lo..config.bw_hi)
                };
                let service = ServiceType::ALL[rng.random_range(0..ServiceType::ALL.len())];
                ServiceRequest::new(src, dst, bw, service)
            })
            .collect();
        out.push((t as u64, reqs));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn flat(nodes: usize, horizon: usize, total: f64) -> TrafficPattern {
        let per = total / (nodes * (nodes - 1)) as f64;
        let m = nodes * nodes;
        let data = (0..horizon * m)
            .map(|k| {
                if (k % m) / nodes == k % nodes {
                    0.0
                } else {
                    per
                }
            })
            .collect();
        TrafficPattern::new(nodes, horizon, data).unwrap()
    }

    #[test]
    fn service_types_are_uniform_and_endpoints_distinct() {
        let topo = Topology::internet2();
        let p = flat(12, 100, 100.0);
        let sets = gen_requests(
            &p,
            &topo,
            &RequestConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(2),
        )
        .unwrap();
        let all: Vec<_> = sets.iter().flat_map(|(_, r)| r).collect();
        assert_eq!(all.len(), 10_000);
        let mut counts = [0usize; 4];
        for r in &all {
            assert_ne!(r.src, r.dst);
            assert!(r.bandwidth >= 10.0 && r.bandwidth < 100.0);
            counts[r.service.index()] += 1;
        }
        for c in counts {
            assert!((c as f64 / 10_000.0 - 0.25).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn endpoints_cover_every_ordered_pair() {
        let topo = Topology::toy();
        let sets = gen_requests(
            &flat(5, 200, 20.0),
            &topo,
            &RequestConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(3),
        )
        .unwrap();
        let mut seen = [[0usize; 5]; 5];
        for r in sets.iter().flat_map(|(_, r)| r) {
            seen[r.src][r.dst] += 1;
        }
        for (i, row) in seen.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                assert_eq!(c > 0, i != j, "pair ({i},{j})");
            }
        }
    }

    #[test]
    fn zero_intensity_policy() {
        let topo = Topology::toy();
        let p = flat(5, 3, 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(gen_requests(&p, &topo, &RequestConfig::default(), &mut rng)
            .unwrap()
            .is_empty());
        let cfg = RequestConfig {
            zero_intensity: ZeroIntensity::MinOne,
            ..Default::default()
        };
        let sets = gen_requests(&p, &topo, &cfg, &mut rng).unwrap();
        assert!(sets.iter().all(|(_, r)| r.len() == 1));
    }
}
