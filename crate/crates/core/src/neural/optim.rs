use serde::{Deserialize, Serialize};

use super::{Gradients, ParamStore, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    /// Plain gradient descent, θ ← θ − η·g.
    Sgd,
    Adam {
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Stateful first-order optimizer over a [`ParamStore`].
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Self {
        Self {
            kind,
            lr,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one descent step using `grads` of the loss.
    pub fn step(&mut self, params: &mut ParamStore, grads: &Gradients) {
        self.step += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (id, g) in grads.iter() {
                    let p = params.get_mut(id);
                    for (w, d) in p.data_mut().iter_mut().zip(g.data()) {
                        *w -= self.lr * d;
                    }
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                if self.m.is_empty() {
                    self.m = params.ids().map(|id| zeros_like(params.get(id))).collect();
                    self.v = self.m.clone();
                }
                let t = self.step as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for (id, g) in grads.iter() {
                    let i = id.index();
                    let (m, v) = (self.m[i].data_mut(), self.v[i].data_mut());
                    let p = params.get_mut(id).data_mut();
                    for k in 0..p.len() {
                        let gk = g.data()[k];
                        m[k] = beta1 * m[k] + (1.0 - beta1) * gk;
                        v[k] = beta2 * v[k] + (1.0 - beta2) * gk * gk;
                        p[k] -= self.lr * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
                    }
                }
            }
        }
    }
}

fn zeros_like(t: &Tensor) -> Tensor {
    Tensor::zeros(t.rows(), t.cols())
}

/// Rescales `grads` so the global L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_grad_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale(max_norm / norm);
    }
    norm
}
