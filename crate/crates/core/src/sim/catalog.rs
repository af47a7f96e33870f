use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// VNF middlebox types. The declaration order is the column order of
/// deployment matrices, annotation matrices and embedding rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VnfType {
    Firewall,
    Ids,
    Proxy,
    Nat,
    Wano,
}

impl VnfType {
    pub const ALL: [VnfType; 5] = [
        VnfType::Firewall,
        VnfType::Ids,
        VnfType::Proxy,
        VnfType::Nat,
        VnfType::Wano,
    ];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(idx: usize) -> Option<Self> {
        Self::ALL.get(idx).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            VnfType::Firewall => "firewall",
            VnfType::Ids => "ids",
            VnfType::Proxy => "proxy",
            VnfType::Nat => "nat",
            VnfType::Wano => "wano",
        }
    }
}

impl fmt::Display for VnfType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The four service chains requests are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceType {
    NatFirewallIds,
    NatProxy,
    NatWano,
    NatFirewallWanoIds,
}

impl ServiceType {
    pub const ALL: [ServiceType; 4] = [
        ServiceType::NatFirewallIds,
        ServiceType::NatProxy,
        ServiceType::NatWano,
        ServiceType::NatFirewallWanoIds,
    ];

    pub fn chain(self) -> &'static [VnfType] {
        use VnfType::*;
        match self {
            ServiceType::NatFirewallIds => &[Nat, Firewall, Ids],
            ServiceType::NatProxy => &[Nat, Proxy],
            ServiceType::NatWano => &[Nat, Wano],
            ServiceType::NatFirewallWanoIds => &[Nat, Firewall, Wano, Ids],
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ServiceType::NatFirewallIds => "nat_firewall_ids",
            ServiceType::NatProxy => "nat_proxy",
            ServiceType::NatWano => "nat_wano",
            ServiceType::NatFirewallWanoIds => "nat_firewall_wano_ids",
        }
    }
}

impl FromStr for ServiceType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown service type `{s}`"))
    }
}

/// Per-type processing capacity of a single instance, in bandwidth units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VnfCatalog {
    pub instance_capacity: [f64; VnfType::COUNT],
}

impl VnfCatalog {
    pub fn uniform(capacity: f64) -> Self {
        Self {
            instance_capacity: [capacity; VnfType::COUNT],
        }
    }

    pub fn types(&self) -> &'static [VnfType] {
        &VnfType::ALL
    }

    pub fn len(&self) -> usize {
        VnfType::COUNT
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn capacity(&self, ty: VnfType) -> f64 {
        self.instance_capacity[ty.index()]
    }
}

impl Default for VnfCatalog {
    fn default() -> Self {
        Self::uniform(500.0)
    }
}
