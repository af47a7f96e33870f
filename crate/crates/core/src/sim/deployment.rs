use serde::{Deserialize, Serialize};

use super::{SimError, Topology, VnfType};

/// Instance counts per (node, VNF type), row-major over nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Deployment {
    nodes: usize,
    counts: Vec<u32>,
}

impl Deployment {
    pub fn zeros(nodes: usize) -> Self {
        Self {
            nodes,
            counts: vec![0; nodes * VnfType::COUNT],
        }
    }

    pub fn from_rows(rows: Vec<Vec<u32>>) -> Result<Self, SimError> {
        let nodes = rows.len();
        let mut counts = Vec::with_capacity(nodes * VnfType::COUNT);
        for (n, row) in rows.into_iter().enumerate() {
            if row.len() != VnfType::COUNT {
                return Err(SimError::Shape(format!(
                    "deployment row {n} has {} columns, expected {}",
                    row.len(),
                    VnfType::COUNT
                )));
            }
            counts.extend(row);
        }
        Ok(Self { nodes, counts })
    }

    pub fn rows(&self) -> Vec<Vec<u32>> {
        self.counts
            .chunks(VnfType::COUNT)
            .map(<[u32]>::to_vec)
            .collect()
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn get(&self, node: usize, ty: VnfType) -> u32 {
        self.counts[node * VnfType::COUNT + ty.index()]
    }

    pub fn set(&mut self, node: usize, ty: VnfType, count: u32) {
        self.counts[node * VnfType::COUNT + ty.index()] = count;
    }

    pub fn add(&mut self, node: usize, ty: VnfType, delta: u32) {
        self.counts[node * VnfType::COUNT + ty.index()] += delta;
    }

    pub fn row(&self, node: usize) -> &[u32] {
        &self.counts[node * VnfType::COUNT..(node + 1) * VnfType::COUNT]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.counts
    }

    /// Σ_n counts over all nodes for one type, `N(f)`.
    pub fn type_total(&self, ty: VnfType) -> u64 {
        (0..self.nodes).map(|n| self.get(n, ty) as u64).sum()
    }

    pub fn node_total(&self, node: usize) -> u64 {
        self.row(node).iter().map(|&c| c as u64).sum()
    }

    /// Forces all counts at a node to zero.
    pub fn clear_node(&mut self, node: usize) {
        for c in &mut self.counts[node * VnfType::COUNT..(node + 1) * VnfType::COUNT] {
            *c = 0;
        }
    }

    /// Zeroes every down node.
    pub fn enforce_status(&mut self, topology: &Topology) {
        for n in 0..self.nodes {
            if !topology.is_up(n) {
                self.clear_node(n);
            }
        }
    }
}

impl Serialize for Deployment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Deployment {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<u32>>::deserialize(d)?;
        Deployment::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

/// Σ_f N(f): every instance in the network.
pub fn total_vnf_count(deployment: &Deployment) -> u64 {
    deployment.counts.iter().map(|&c| c as u64).sum()
}

/// Scale-in / keep / scale-out decision per (node, type), entries in {-1, 0, 1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionMatrix {
    nodes: usize,
    entries: Vec<i8>,
}

impl ActionMatrix {
    pub fn new(nodes: usize, entries: Vec<i8>) -> Result<Self, SimError> {
        if entries.len() != nodes * VnfType::COUNT {
            return Err(SimError::Shape(format!(
                "action has {} entries, expected {}x{}",
                entries.len(),
                nodes,
                VnfType::COUNT
            )));
        }
        if let Some(&bad) = entries.iter().find(|v| !(-1..=1).contains(*v)) {
            return Err(SimError::ActionValue(bad));
        }
        Ok(Self { nodes, entries })
    }

    pub fn keep(nodes: usize) -> Self {
        Self {
            nodes,
            entries: vec![0; nodes * VnfType::COUNT],
        }
    }

    /// Builds an action from class indices (0 = scale-in, 1 = keep, 2 = scale-out).
    pub fn from_classes(nodes: usize, classes: &[usize]) -> Result<Self, SimError> {
        let entries = classes
            .iter()
            .map(|&c| match c {
                0..=2 => Ok(c as i8 - 1),
                other => Err(SimError::ActionValue(other.min(127) as i8)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(nodes, entries)
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn get(&self, node: usize, ty: VnfType) -> i8 {
        self.entries[node * VnfType::COUNT + ty.index()]
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    pub fn classes(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&e| (e + 1) as usize)
    }
}

/// `count' = max(0, count + action)` elementwise; down nodes stay at zero.
pub fn apply_action(
    deployment: &Deployment,
    action: &ActionMatrix,
    topology: &Topology,
) -> Result<Deployment, SimError> {
    if action.nodes != deployment.nodes || deployment.nodes != topology.len() {
        return Err(SimError::Shape(format!(
            "action covers {} nodes, deployment {}, topology {}",
            action.nodes,
            deployment.nodes,
            topology.len()
        )));
    }
    let mut next = deployment.clone();
    for (i, (c, &a)) in next.counts.iter_mut().zip(&action.entries).enumerate() {
        let node = i / VnfType::COUNT;
        if !topology.is_up(node) {
            *c = 0;
            continue;
        }
        *c = (*c as i64 + a as i64).max(0) as u32;
    }
    Ok(next)
}
