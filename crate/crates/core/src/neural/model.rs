use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Graph, NeuralError, ParamId, ParamStore, Tensor, Var};
use crate::encoding::{AdjacencyMatrix, SurrogateState, ANNOTATION_COLS};
use crate::sim::VnfType;

/// Number of action classes per (node, type): scale-in, keep, scale-out.
pub const ACTION_CLASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Hidden width d of node embeddings and VNF embeddings.
    pub hidden: usize,
    /// Propagation steps T.
    pub steps: usize,
    /// Hidden layers in each feed-forward head.
    pub ff_layers: usize,
    /// Width of each hidden layer; 2d by default.
    pub ff_width: usize,
    /// Preference columns P appended to every (node, type) row.
    pub pref_dims: usize,
}

impl ModelConfig {
    pub fn new(hidden: usize, steps: usize, pref_dims: usize) -> Self {
        Self {
            hidden,
            steps,
            ff_layers: 2,
            ff_width: 2 * hidden,
            pref_dims,
        }
    }

    /// Width of a fused row: 2d + P.
    pub fn fused_width(&self) -> usize {
        2 * self.hidden + self.pref_dims
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.hidden == 0 || self.ff_width == 0 {
            return Err(NeuralError::Shape(
                "hidden and ff widths must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::new(32, 3, 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Gru {
    w_z: ParamId,
    u_z: ParamId,
    b_z: ParamId,
    w_r: ParamId,
    u_r: ParamId,
    b_r: ParamId,
    w_h: ParamId,
    u_h: ParamId,
    b_h: ParamId,
}

#[derive(Debug, Clone, PartialEq)]
struct Dense {
    w: ParamId,
    b: ParamId,
}

/// Outputs of one forward pass, as tape handles.
#[derive(Debug, Clone, Copy)]
pub struct ForwardVars {
    /// `(|N|·|F|) × 3` log-probabilities, row `n·|F| + f`.
    pub log_probs: Var,
    /// `1 × 1` state value.
    pub value: Var,
    /// Fused input Ẑ, `(|N|·|F|) × (2d+P)`.
    pub fused: Var,
}

/// Shared GGNN encoder and VNF embeddings with separate policy and value heads.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValueNet {
    config: ModelConfig,
    params: ParamStore,
    w_in: ParamId,
    b_in: ParamId,
    msg: Vec<Dense>,
    gru: Gru,
    embed: ParamId,
    policy: Vec<Dense>,
    value: Vec<Dense>,
}

impl PolicyValueNet {
    pub fn new<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self, NeuralError> {
        config.validate()?;
        let d = config.hidden;
        let mut p = ParamStore::new();
        let dense =
            |p: &mut ParamStore, name: &str, fan_in: usize, out: usize, rng: &mut R| Dense {
                w: p.insert_uniform(&format!("{name}.w"), fan_in, out, fan_in, rng),
                b: p.insert_uniform(&format!("{name}.b"), 1, out, fan_in, rng),
            };
        let input = dense(&mut p, "ggnn.input", ANNOTATION_COLS, d, rng);
        let msg = (0..config.steps)
            .map(|t| dense(&mut p, &format!("ggnn.msg.{t}"), d, d, rng))
            .collect();
        let gate = |p: &mut ParamStore, g: &str, rng: &mut R| {
            (
                p.insert_uniform(&format!("ggnn.gru.w_{g}"), d, d, d, rng),
                p.insert_uniform(&format!("ggnn.gru.u_{g}"), d, d, d, rng),
                p.insert_uniform(&format!("ggnn.gru.b_{g}"), 1, d, d, rng),
            )
        };
        let (w_z, u_z, b_z) = gate(&mut p, "z", rng);
        let (w_r, u_r, b_r) = gate(&mut p, "r", rng);
        let (w_h, u_h, b_h) = gate(&mut p, "h", rng);
        let embed = p.insert_normal("embed.vnf", VnfType::COUNT, d, 0.1, rng);
        let head = |p: &mut ParamStore, name: &str, out: usize, rng: &mut R| {
            let mut layers = Vec::with_capacity(config.ff_layers + 1);
            let mut fan_in = config.fused_width();
            for i in 0..config.ff_layers {
                layers.push(dense(
                    p,
                    &format!("{name}.{i}"),
                    fan_in,
                    config.ff_width,
                    rng,
                ));
                fan_in = config.ff_width;
            }
            layers.push(dense(p, &format!("{name}.out"), fan_in, out, rng));
            layers
        };
        let policy = head(&mut p, "policy", ACTION_CLASSES, rng);
        let value = head(&mut p, "value", 1, rng);
        Ok(Self {
            config,
            params: p,
            w_in: input.w,
            b_in: input.b,
            msg,
            gru: Gru {
                w_z,
                u_z,
                b_z,
                w_r,
                u_r,
                b_r,
                w_h,
                u_h,
                b_h,
            },
            embed,
            policy,
            value,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    /// Parameter groups, for diagnostics and gradient checks.
    pub fn param_group(name: &str) -> &'static str {
        const GROUPS: [&str; 6] = [
            "ggnn.input",
            "ggnn.msg",
            "ggnn.gru",
            "embed",
            "policy",
            "value",
        ];
        GROUPS
            .iter()
            .find(|g| name.starts_with(*g))
            .copied()
            .unwrap_or("other")
    }

    /// GGNN over `blocks` stacked annotation matrices (`(blocks·n) × 7`),
    /// returning the stacked `(blocks·n) × d` node states.
    pub fn ggnn_encode(
        &self,
        g: &mut Graph,
        adj: &Arc<Tensor>,
        annotations: Var,
        blocks: usize,
    ) -> Var {
        let mut h = g.linear(annotations, self.w_in, self.b_in);
        for step in &self.msg {
            let mh = g.block_matmul(adj, h, blocks);
            let a = g.linear(mh, step.w, step.b);
            let gru = &self.gru;
            let z = self.gate(g, a, h, gru.w_z, gru.u_z, gru.b_z);
            let z = g.sigmoid(z);
            let r = self.gate(g, a, h, gru.w_r, gru.u_r, gru.b_r);
            let r = g.sigmoid(r);
            let rh = g.mul(r, h);
            let cand = self.gate(g, a, rh, gru.w_h, gru.u_h, gru.b_h);
            let cand = g.tanh(cand);
            let keep = g.one_minus(z);
            let old = g.mul(keep, h);
            let new = g.mul(z, cand);
            h = g.add(old, new);
        }
        h
    }

    fn gate(&self, g: &mut Graph, a: Var, h: Var, w: ParamId, u: ParamId, b: ParamId) -> Var {
        let wv = g.param(w);
        let uv = g.param(u);
        let aw = g.matmul(a, wv);
        let hu = g.matmul(h, uv);
        let s = g.add(aw, hu);
        let bv = g.param(b);
        g.add_row(s, bv)
    }

    /// Builds Ẑ from the aggregated node embedding `h` (`n × d`).
    pub fn fuse(&self, g: &mut Graph, h: Var, preference: &[f64]) -> Result<Var, NeuralError> {
        if preference.len() != self.config.pref_dims {
            return Err(NeuralError::Shape(format!(
                "model expects {} preference inputs, got {}",
                self.config.pref_dims,
                preference.len()
            )));
        }
        let n = g.value(h).rows();
        let f = VnfType::COUNT;
        let node_idx = Arc::new((0..n * f).map(|i| i / f).collect::<Vec<_>>());
        let type_idx = Arc::new((0..n * f).map(|i| i % f).collect::<Vec<_>>());
        let hg = g.gather_rows(h, node_idx);
        let e = g.param(self.embed);
        let eg = g.gather_rows(e, type_idx);
        if preference.is_empty() {
            return Ok(g.concat_cols(&[hg, eg]));
        }
        let pref = Tensor::new(
            n * f,
            preference.len(),
            (0..n * f)
                .flat_map(|_| preference.iter().copied())
                .collect(),
        );
        let pv = g.constant(pref);
        Ok(g.concat_cols(&[hg, eg, pv]))
    }

    fn head(&self, g: &mut Graph, layers: &[Dense], mut x: Var) -> Var {
        let (last, hidden) = layers.split_last().expect("head has an output layer");
        for l in hidden {
            let y = g.linear(x, l.w, l.b);
            x = g.tanh(y);
        }
        g.linear(x, last.w, last.b)
    }

    pub fn policy_forward(&self, g: &mut Graph, fused: Var) -> Var {
        let logits = self.head(g, &self.policy, fused);
        g.log_softmax_rows(logits)
    }

    pub fn value_forward(&self, g: &mut Graph, fused: Var) -> Var {
        let pooled = g.mean_rows(fused);
        self.head(g, &self.value, pooled)
    }

    /// Full forward pass for one surrogate state on a tape bound to this
    /// network's parameters.
    pub fn forward(
        &self,
        g: &mut Graph,
        state: &SurrogateState,
    ) -> Result<ForwardVars, NeuralError> {
        let n = state.nodes();
        let blocks = state.annotations.len();
        if blocks == 0 {
            return Err(NeuralError::Shape("state has no requests".into()));
        }
        let mut stacked = Vec::with_capacity(blocks * n * ANNOTATION_COLS);
        for x in &state.annotations {
            if x.nodes() != n {
                return Err(NeuralError::Shape(format!(
                    "annotation has {} rows, adjacency {n}",
                    x.nodes()
                )));
            }
            stacked.extend_from_slice(x.as_slice());
        }
        let adj = Arc::new(adjacency_tensor(&state.adjacency));
        let xs = g.constant(Tensor::new(blocks * n, ANNOTATION_COLS, stacked));
        let hs = self.ggnn_encode(g, &adj, xs, blocks);
        let h = g.block_mean(hs, blocks);
        let fused = self.fuse(g, h, &state.preference)?;
        let log_probs = self.policy_forward(g, fused);
        let value = self.value_forward(g, fused);
        g.check_finite()?;
        Ok(ForwardVars {
            log_probs,
            value,
            fused,
        })
    }

    /// Action probabilities (`(|N|·|F|) × 3`) and state value.
    pub fn evaluate(&self, state: &SurrogateState) -> Result<(Tensor, f64), NeuralError> {
        let mut g = Graph::new(&self.params);
        let out = self.forward(&mut g, state)?;
        let probs = g.value(out.log_probs).map(f64::exp);
        Ok((probs, g.value(out.value).item()))
    }

    /// Log-probabilities only; used for acting.
    pub fn log_probs(&self, state: &SurrogateState) -> Result<Tensor, NeuralError> {
        let mut g = Graph::new(&self.params);
        let out = self.forward(&mut g, state)?;
        Ok(g.value(out.log_probs).clone())
    }

    /// Node embeddings of a single request, `n × d`.
    pub fn encode_request(
        &self,
        adjacency: &AdjacencyMatrix,
        annotation: &crate::encoding::AnnotationMatrix,
    ) -> Tensor {
        let mut g = Graph::new(&self.params);
        let adj = Arc::new(adjacency_tensor(adjacency));
        let x = g.constant(Tensor::new(
            annotation.nodes(),
            ANNOTATION_COLS,
            annotation.as_slice().to_vec(),
        ));
        let h = self.ggnn_encode(&mut g, &adj, x, 1);
        g.value(h).clone()
    }
}

pub fn adjacency_tensor(m: &AdjacencyMatrix) -> Tensor {
    Tensor::new(m.len(), m.len(), m.as_slice().to_vec())
}
