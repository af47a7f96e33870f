//! Simulation dataset generation: traffic, requests, perturbed initial
//! deployments, SLA calibration and the train/val/test split.

mod io;
mod placement;
mod requests;
mod sla;
mod traffic;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use io::{
    read_dataset, read_meta, read_split, read_topology, write_dataset, write_topology, Split,
    TOPOLOGY_FILE,
};
pub use placement::{
    betweenness, centrality_ranking, feasibility_guard, greedy_deployment, init_deployment,
    perturb, required_instances,
};
pub use requests::{gen_requests, RequestConfig, ZeroIntensity};
pub use sla::{
    calibrate_sla, calibrate_sla_from_delays, percentile, record_delays, violation_rate, MIN_PATHS,
};
pub use traffic::{synth_traffic, TrafficConfig, TrafficPattern};

use crate::sim::{Deployment, ServiceRequest, SimError, Topology, VnfCatalog};

#[derive(Debug, thiserror::Error)]
pub enum DatagenError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("too few {what}: got {got}, need {need}")]
    TooFew {
        what: &'static str,
        got: usize,
        need: usize,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
}

/// One simulation sample: the active requests at a timestep and the initial
/// deployment they start from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub t: u64,
    pub requests: Vec<ServiceRequest>,
    pub deployment: Deployment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub topology: String,
    /// ζ_SLA in milliseconds.
    pub sla_ms: f64,
    pub counts: SplitCounts,
    pub seed: u64,
    pub config: GenConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub horizon: usize,
    pub traffic: TrafficConfig,
    pub requests: RequestConfig,
    pub catalog: VnfCatalog,
    /// Fraction of (node, type) cells moved by ±1 after greedy placement.
    pub perturb_fraction: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            horizon: 2000,
            traffic: TrafficConfig::default(),
            requests: RequestConfig::default(),
            catalog: VnfCatalog::default(),
            perturb_fraction: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub train: Vec<DatasetRecord>,
    pub val: Vec<DatasetRecord>,
    pub test: Vec<DatasetRecord>,
}

impl Dataset {
    pub fn all_records(&self) -> impl Iterator<Item = &DatasetRecord> {
        self.train.iter().chain(&self.val).chain(&self.test)
    }
}

/// Train, validation and test records.
pub type Splits<T> = (Vec<T>, Vec<T>, Vec<T>);

/// Contiguous split: the last two blocks of ⌊N/10⌋ records are validation
/// and test, the rest is training.
pub fn split<T: Clone>(records: &[T]) -> Result<Splits<T>, DatagenError> {
    let n = records.len();
    if n < 10 {
        return Err(DatagenError::TooFew {
            what: "records to split",
            got: n,
            need: 10,
        });
    }
    let k = n / 10;
    let train = n - 2 * k;
    Ok((
        records[..train].to_vec(),
        records[train..train + k].to_vec(),
        records[train + k..].to_vec(),
    ))
}

/// Stream ids for the generator's independent RNGs.
const TRAFFIC_STREAM: u64 = 0;
const REQUEST_STREAM: u64 = 1;
const PLACEMENT_STREAM: u64 = 2;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Builds records from an explicit traffic pattern.
pub fn records_from_traffic(
    pattern: &TrafficPattern,
    topology: &Topology,
    config: &GenConfig,
    seed: u64,
) -> Result<Vec<DatasetRecord>, DatagenError> {
    if pattern.nodes() != topology.len() {
        return Err(DatagenError::Config(format!(
            "traffic covers {} nodes, topology has {}",
            pattern.nodes(),
            topology.len()
        )));
    }
    let sets = gen_requests(
        pattern,
        topology,
        &config.requests,
        &mut rng(seed, REQUEST_STREAM),
    )?;
    let mut place_rng = rng(seed, PLACEMENT_STREAM);
    Ok(sets
        .into_iter()
        .map(|(t, requests)| {
            let deployment = init_deployment(
                topology,
                &requests,
                &config.catalog,
                config.perturb_fraction,
                &mut place_rng,
            );
            DatasetRecord {
                t,
                requests,
                deployment,
            }
        })
        .collect())
}

/// Full pipeline on synthetic traffic.
pub fn generate(
    topology: &Topology,
    config: &GenConfig,
    seed: u64,
) -> Result<Dataset, DatagenError> {
    let pattern = synth_traffic(
        &mut rng(seed, TRAFFIC_STREAM),
        topology.len(),
        config.horizon,
        &config.traffic,
    )?;
    generate_from_traffic(&pattern, topology, config, seed)
}

/// Full pipeline on a given traffic pattern (e.g. an ingested trace).
pub fn generate_from_traffic(
    pattern: &TrafficPattern,
    topology: &Topology,
    config: &GenConfig,
    seed: u64,
) -> Result<Dataset, DatagenError> {
    let records = records_from_traffic(pattern, topology, config, seed)?;
    let sla_ms = calibrate_sla(&records, topology)?;
    let (train, val, test) = split(&records)?;
    let meta = DatasetMeta {
        topology: topology.name().to_string(),
        sla_ms,
        counts: SplitCounts {
            train: train.len(),
            val: val.len(),
            test: test.len(),
        },
        seed,
        config: config.clone(),
    };
    Ok(Dataset {
        meta,
        train,
        val,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes() {
        let v: Vec<usize> = (0..14736).collect();
        let (a, b, c) = split(&v).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (11790, 1473, 1473));
        let (a, b, c) = split(&v[..10]).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (8, 1, 1));
        assert_eq!([a, b, c].concat(), v[..10].to_vec());
        assert!(split(&v[..9]).is_err());
    }
}
