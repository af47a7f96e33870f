use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named trainable tensors, in registration order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            tensors: Vec::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        let name = name.into();
        assert!(!self.names.contains(&name), "duplicate parameter {name}");
        self.names.push(name);
        self.tensors.push(value);
        ParamId(self.tensors.len() - 1)
    }

    /// Weight matrix with entries uniform in ±1/√fan_in.
    pub fn insert_uniform<R: Rng + ?Sized>(
        &mut self,
        name: &str,
        rows: usize,
        cols: usize,
        fan_in: usize,
        rng: &mut R,
    ) -> ParamId {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        self.insert(name, Tensor::new(rows, cols, data))
    }

    pub fn insert_normal<R: Rng + ?Sized>(
        &mut self,
        name: &str,
        rows: usize,
        cols: usize,
        std: f64,
        rng: &mut R,
    ) -> ParamId {
        let normal = Normal::new(0.0, std).expect("valid std");
        let data = (0..rows * cols).map(|_| normal.sample(rng)).collect();
        self.insert(name, Tensor::new(rows, cols, data))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Overwrites every parameter with zeros.
    pub fn zero_all(&mut self) {
        for t in &mut self.tensors {
            t.data_mut().fill(0.0);
        }
    }

    /// Replaces the values of all parameters present in `other` by name.
    pub fn load_from(&mut self, other: &BTreeMap<String, Tensor>) -> Result<(), String> {
        for (name, t) in self.names.iter().zip(&mut self.tensors) {
            let src = other
                .get(name)
                .ok_or_else(|| format!("missing parameter {name}"))?;
            if src.shape() != t.shape() {
                return Err(format!(
                    "parameter {name}: shape {:?} vs {:?}",
                    src.shape(),
                    t.shape()
                ));
            }
            *t = src.clone();
        }
        if other.len() != self.names.len() {
            return Err(format!(
                "checkpoint has {} tensors, model expects {}",
                other.len(),
                self.names.len()
            ));
        }
        Ok(())
    }
}

impl Default for ParamStore {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradient per parameter, aligned with a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    grads: Vec<Tensor>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Self {
            grads: store
                .tensors
                .iter()
                .map(|t| Tensor::zeros(t.rows(), t.cols()))
                .collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.grads[id.0]
    }

    pub(crate) fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.grads[id.0]
    }

    pub fn accumulate(&mut self, other: &Gradients) {
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for g in &mut self.grads {
            g.scale_assign(s);
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.grads.iter().map(Tensor::norm_sq).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.grads.iter().all(Tensor::is_finite)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor)> {
        self.grads.iter().enumerate().map(|(i, t)| (ParamId(i), t))
    }
}
