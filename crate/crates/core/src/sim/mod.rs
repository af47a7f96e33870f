//! Deterministic network environment: topology, service requests, chain
//! routing and delay, VNF deployment state, scaling actions and power.

mod catalog;
mod deployment;
mod env;
mod power;
mod request;
mod routing;
mod topology;

pub use catalog::{ServiceType, VnfCatalog, VnfType};
pub use deployment::{apply_action, total_vnf_count, ActionMatrix, Deployment};
pub use env::{EnvConfig, Measurement, NetworkEnv, RouteOutcome};
pub use power::{node_power, PowerModel};
pub use request::ServiceRequest;
pub use routing::{path_delay, route_sfc, Router, SfcPath};
pub use topology::{Edge, Node, NodeStatus, Topology};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no edge between nodes {a} and {b}")]
    MissingEdge { a: usize, b: usize },
    #[error("no deployed instance of {0} can be reached")]
    Unroutable(VnfType),
    #[error("node {a} cannot reach node {b}")]
    Disconnected { a: usize, b: usize },
    #[error("node {0} is down")]
    NodeDown(usize),
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("action entry {0} outside {{-1, 0, 1}}")]
    ActionValue(i8),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}
