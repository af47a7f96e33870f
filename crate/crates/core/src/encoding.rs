//! Policy/value network inputs: inverse-delay adjacency, per-request
//! annotation matrices and the normalized preference vector.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::pref::PreferenceDistribution;
use crate::rl::{Preference, Task};
use crate::sim::{Deployment, ServiceRequest, Topology, VnfType};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EncodingError {
    #[error("edge ({0}, {1}) has zero delay")]
    ZeroDelay(usize, usize),
    #[error("preference normalization undefined: {0}")]
    NormalizationUndefined(String),
    #[error("surrogate state needs at least one request")]
    NoRequests,
    #[error("request endpoint {0} outside the topology")]
    UnknownNode(usize),
    #[error("preference is missing β for a power-management input")]
    MissingBeta,
    #[error("preference values must be finite and >= 0")]
    InvalidPreference,
}

/// `M[i][j] = 1 / e(i, j)` on live edges, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    n: usize,
    data: Vec<f64>,
}

impl AdjacencyMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn from_raw(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        Self { n, data }
    }
}

pub fn adjacency(topology: &Topology) -> Result<AdjacencyMatrix, EncodingError> {
    let n = topology.len();
    let mut data = vec![0.0; n * n];
    for e in topology.edges() {
        if e.delay_ms == 0.0 {
            return Err(EncodingError::ZeroDelay(e.i, e.j));
        }
        if topology.is_up(e.i) && topology.is_up(e.j) {
            data[e.i * n + e.j] = 1.0 / e.delay_ms;
            data[e.j * n + e.i] = 1.0 / e.delay_ms;
        }
    }
    Ok(AdjacencyMatrix { n, data })
}

/// Number of annotation columns: one per VNF type plus source/destination flags.
pub const ANNOTATION_COLS: usize = VnfType::COUNT + 2;

/// Node features for one request: instance counts, then src/dst indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationMatrix {
    n: usize,
    data: Vec<f64>,
}

impl AnnotationMatrix {
    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn get(&self, node: usize, col: usize) -> f64 {
        self.data[node * ANNOTATION_COLS + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

pub fn annotate(
    deployment: &Deployment,
    request: &ServiceRequest,
) -> Result<AnnotationMatrix, EncodingError> {
    let n = deployment.nodes();
    for node in [request.src, request.dst] {
        if node >= n {
            return Err(EncodingError::UnknownNode(node));
        }
    }
    let mut data = vec![0.0; n * ANNOTATION_COLS];
    for node in 0..n {
        let row = &mut data[node * ANNOTATION_COLS..(node + 1) * ANNOTATION_COLS];
        for (slot, &c) in row.iter_mut().zip(deployment.row(node)) {
            *slot = c as f64;
        }
    }
    data[request.src * ANNOTATION_COLS + VnfType::COUNT] = 1.0;
    data[request.dst * ANNOTATION_COLS + VnfType::COUNT + 1] = 1.0;
    Ok(AnnotationMatrix { n, data })
}

/// `value / 𝔼[value]` under the given distribution.
pub fn normalize_preference(
    value: f64,
    dist: &PreferenceDistribution,
) -> Result<f64, EncodingError> {
    let mean = dist.mean().ok_or_else(|| {
        EncodingError::NormalizationUndefined(format!("{dist} has no fixed expectation"))
    })?;
    if !(mean > 0.0) {
        return Err(EncodingError::NormalizationUndefined(format!(
            "{dist} has zero mean"
        )));
    }
    Ok(value / mean)
}

/// Which preference coordinates the network sees, and their normalizers.
///
/// A coordinate is only fed when its training distribution is informative:
/// a point-mass distribution makes the normalized input a constant, so such
/// an agent is exactly the static-preference baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceInput {
    pub alpha: Option<PreferenceDistribution>,
    pub beta: Option<PreferenceDistribution>,
}

impl PreferenceInput {
    /// No preference input at all (static baseline agents).
    pub fn none() -> Self {
        Self {
            alpha: None,
            beta: None,
        }
    }

    /// Builds the input layout from training distributions.
    pub fn from_training(
        task: Task,
        alpha: &PreferenceDistribution,
        beta: Option<&PreferenceDistribution>,
    ) -> Result<Self, EncodingError> {
        let feed =
            |d: &PreferenceDistribution| -> Result<Option<PreferenceDistribution>, EncodingError> {
                if d.is_degenerate() {
                    return Ok(None);
                }
                normalize_preference(1.0, d)?;
                Ok(Some(d.clone()))
            };
        let alpha = feed(alpha)?;
        let beta = match (task, beta) {
            (Task::PowerManagement, Some(b)) => feed(b)?,
            (Task::PowerManagement, None) => return Err(EncodingError::MissingBeta),
            (Task::AutoScaling, _) => None,
        };
        Ok(Self { alpha, beta })
    }

    /// P, the number of preference columns appended to every (node, type) row.
    pub fn dims(&self) -> usize {
        self.alpha.is_some() as usize + self.beta.is_some() as usize
    }

    pub fn encode(&self, pref: Preference) -> Result<Vec<f64>, EncodingError> {
        let check = |v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(EncodingError::InvalidPreference)
            }
        };
        let mut out = Vec::with_capacity(self.dims());
        if let Some(d) = &self.alpha {
            out.push(normalize_preference(check(pref.alpha)?, d)?);
        }
        if let Some(d) = &self.beta {
            out.push(normalize_preference(
                check(pref.beta.ok_or(EncodingError::MissingBeta)?)?,
                d,
            )?);
        }
        Ok(out)
    }
}

/// Surrogate state ŝ = (s, ω): shared adjacency, one annotation matrix per
/// active request, normalized preference vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateState {
    pub adjacency: Arc<AdjacencyMatrix>,
    pub annotations: Vec<AnnotationMatrix>,
    pub preference: Vec<f64>,
}

impl SurrogateState {
    pub fn nodes(&self) -> usize {
        self.adjacency.len()
    }
}

pub fn assemble_state(
    adjacency: Arc<AdjacencyMatrix>,
    requests: &[&ServiceRequest],
    deployment: &Deployment,
    preference: Preference,
    input: &PreferenceInput,
) -> Result<SurrogateState, EncodingError> {
    if requests.is_empty() {
        return Err(EncodingError::NoRequests);
    }
    let annotations = requests
        .iter()
        .map(|r| annotate(deployment, r))
        .collect::<Result<Vec<_>, _>>()?;
    let preference = input.encode(preference)?;
    Ok(SurrogateState {
        adjacency,
        annotations,
        preference,
    })
}
