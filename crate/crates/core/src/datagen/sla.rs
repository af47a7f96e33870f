use super::{DatagenError, DatasetRecord};
use crate::sim::{path_delay, Router, Topology};

/// Minimum number of routed paths for a meaningful percentile.
pub const MIN_PATHS: usize = 20;

/// Percentile by linear interpolation between order statistics at rank
/// `p·(n−1)`.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = p * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    v[lo] + (rank - lo as f64) * (v[hi] - v[lo])
}

/// ζ_SLA as the 95th percentile of path delays.
pub fn calibrate_sla_from_delays(delays: &[f64]) -> Result<f64, DatagenError> {
    if delays.len() < MIN_PATHS {
        return Err(DatagenError::TooFew {
            what: "routed paths",
            got: delays.len(),
            need: MIN_PATHS,
        });
    }
    Ok(percentile(delays, 0.95))
}

/// Delay of every request in every record, routed on that record's deployment.
pub fn record_delays(
    records: &[DatasetRecord],
    topology: &Topology,
) -> Result<Vec<f64>, DatagenError> {
    let router = Router::new(topology);
    let mut out = Vec::new();
    for rec in records {
        for req in &rec.requests {
            let path = router.route(&rec.deployment, req)?;
            out.push(path_delay(topology, &path)?);
        }
    }
    Ok(out)
}

pub fn calibrate_sla(records: &[DatasetRecord], topology: &Topology) -> Result<f64, DatagenError> {
    calibrate_sla_from_delays(&record_delays(records, topology)?)
}

/// Fraction of delays strictly above `sla`.
pub fn violation_rate(delays: &[f64], sla: f64) -> f64 {
    delays.iter().filter(|&&d| d > sla).count() as f64 / delays.len().max(1) as f64
}
