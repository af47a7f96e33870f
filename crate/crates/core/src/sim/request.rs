use serde::{Deserialize, Serialize};

use super::{ServiceType, SimError, Topology};

/// A service request: traffic from `src` to `dst` that must traverse the
/// VNF chain of its service type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceRequest {
    pub src: usize,
    pub dst: usize,
    #[serde(rename = "bw")]
    pub bandwidth: f64,
    #[serde(rename = "type")]
    pub service: ServiceType,
}

impl ServiceRequest {
    pub fn new(src: usize, dst: usize, bandwidth: f64, service: ServiceType) -> Self {
        Self {
            src,
            dst,
            bandwidth,
            service,
        }
    }

    pub fn validate(&self, topology: &Topology) -> Result<(), SimError> {
        let n = topology.len();
        if self.src >= n {
            return Err(SimError::UnknownNode(self.src));
        }
        if self.dst >= n {
            return Err(SimError::UnknownNode(self.dst));
        }
        if self.src == self.dst {
            return Err(SimError::Config(format!(
                "request src and dst are both node {}",
                self.src
            )));
        }
        if !(self.bandwidth > 0.0) || !self.bandwidth.is_finite() {
            return Err(SimError::Config(
                "request bandwidth must be positive".into(),
            ));
        }
        Ok(())
    }

    /// True when both endpoints are currently up.
    pub fn is_live(&self, topology: &Topology) -> bool {
        topology.is_up(self.src) && topology.is_up(self.dst)
    }
}
