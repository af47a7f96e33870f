//! Reverse-mode differentiation over a per-forward tape.
//!
//! A [`Graph`] records every intermediate value; [`Graph::backward`] walks
//! the tape in reverse and accumulates parameter gradients.

use std::sync::Arc;

use super::{Gradients, NeuralError, ParamId, ParamStore, Tensor};

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    /// Adds a `1 × c` row to every row.
    AddRow(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Sigmoid(Var),
    Tanh(Var),
    Exp(Var),
    Square(Var),
    Clamp(Var, f64, f64),
    Min(Var, Var),
    /// `blocks` stacked `n × c` blocks, each left-multiplied by `adj`.
    BlockMatMul {
        adj: Arc<Tensor>,
        input: Var,
        blocks: usize,
    },
    /// Mean of `blocks` stacked blocks.
    BlockMean {
        input: Var,
        blocks: usize,
    },
    GatherRows(Var, Arc<Vec<usize>>),
    ConcatCols(Vec<Var>),
    MeanRows(Var),
    SumCols(Var),
    SumAll(Var),
    LogSoftmaxRows(Var),
    PickPerRow(Var, Arc<Vec<usize>>),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Tape bound to a parameter store for one forward/backward pass.
pub struct Graph<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    non_finite: Option<&'static str>,
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Self {
            params,
            nodes: Vec::with_capacity(256),
            non_finite: None,
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Fails if any recorded value was NaN or infinite.
    pub fn check_finite(&self) -> Result<(), NeuralError> {
        match self.non_finite {
            Some(op) => Err(NeuralError::NonFinite(op)),
            None => Ok(()),
        }
    }

    fn push(&mut self, value: Tensor, op: Op, name: &'static str) -> Var {
        if self.non_finite.is_none() && !value.is_finite() {
            self.non_finite = Some(name);
        }
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, "constant")
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.push(self.params.get(id).clone(), Op::Param(id), "param")
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::MatMul(a, b), "matmul")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.push(v, Op::Add(a, b), "add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        self.push(v, Op::Sub(a, b), "sub")
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        self.push(v, Op::Mul(a, b), "mul")
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let (x, r) = (self.value(a), self.value(row));
        assert_eq!(
            r.shape(),
            [1, x.cols()],
            "add_row expects a 1x{} row",
            x.cols()
        );
        let mut out = x.clone();
        let cols = x.cols();
        for chunk in out.data_mut().chunks_mut(cols) {
            for (o, b) in chunk.iter_mut().zip(r.data()) {
                *o += b;
            }
        }
        self.push(out, Op::AddRow(a, row), "add_row")
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a).map(|x| x * s);
        self.push(v, Op::Scale(a, s), "scale")
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| x + c);
        self.push(v, Op::AddScalar(a), "add_scalar")
    }

    /// `1 − a`.
    pub fn one_minus(&mut self, a: Var) -> Var {
        let neg = self.scale(a, -1.0);
        self.add_scalar(neg, 1.0)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).map(sigmoid);
        self.push(v, Op::Sigmoid(a), "sigmoid")
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::tanh);
        self.push(v, Op::Tanh(a), "tanh")
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::exp);
        self.push(v, Op::Exp(a), "exp")
    }

    pub fn square(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x * x);
        self.push(v, Op::Square(a), "square")
    }

    /// Elementwise clamp; the gradient passes only inside `[lo, hi]`.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        let v = self.value(a).map(|x| x.clamp(lo, hi));
        self.push(v, Op::Clamp(a, lo, hi), "clamp")
    }

    /// Elementwise minimum; ties route the gradient to `a`.
    pub fn min(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), f64::min);
        self.push(v, Op::Min(a, b), "min")
    }

    /// Applies `adj ·` to each of `blocks` vertically stacked blocks of `input`.
    pub fn block_matmul(&mut self, adj: &Arc<Tensor>, input: Var, blocks: usize) -> Var {
        let x = self.value(input);
        let n = adj.rows();
        assert_eq!(adj.cols(), n);
        assert_eq!(
            x.rows(),
            n * blocks,
            "block_matmul: {} rows for {blocks} blocks of {n}",
            x.rows()
        );
        let c = x.cols();
        let mut out = Vec::with_capacity(x.len());
        for b in 0..blocks {
            let block = Tensor::new(n, c, x.data()[b * n * c..(b + 1) * n * c].to_vec());
            out.extend(adj.matmul(&block).into_data());
        }
        let v = Tensor::new(n * blocks, c, out);
        self.push(
            v,
            Op::BlockMatMul {
                adj: Arc::clone(adj),
                input,
                blocks,
            },
            "block_matmul",
        )
    }

    pub fn block_mean(&mut self, input: Var, blocks: usize) -> Var {
        let x = self.value(input);
        assert!(blocks > 0 && x.rows().is_multiple_of(blocks));
        let block_len = x.len() / blocks;
        let mut out = vec![0.0; block_len];
        for b in 0..blocks {
            for (o, v) in out
                .iter_mut()
                .zip(&x.data()[b * block_len..(b + 1) * block_len])
            {
                *o += v;
            }
        }
        let inv = 1.0 / blocks as f64;
        out.iter_mut().for_each(|o| *o *= inv);
        let v = Tensor::new(x.rows() / blocks, x.cols(), out);
        self.push(v, Op::BlockMean { input, blocks }, "block_mean")
    }

    pub fn gather_rows(&mut self, a: Var, idx: Arc<Vec<usize>>) -> Var {
        let x = self.value(a);
        let mut out = Vec::with_capacity(idx.len() * x.cols());
        for &i in idx.iter() {
            out.extend_from_slice(x.row(i));
        }
        let v = Tensor::new(idx.len(), x.cols(), out);
        self.push(v, Op::GatherRows(a, idx), "gather_rows")
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows();
        let cols: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut out = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                let t = self.value(p);
                assert_eq!(t.rows(), rows, "concat_cols row mismatch");
                out.extend_from_slice(t.row(r));
            }
        }
        let v = Tensor::new(rows, cols, out);
        self.push(v, Op::ConcatCols(parts.to_vec()), "concat_cols")
    }

    /// `1 × c` column means.
    pub fn mean_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut out = vec![0.0; x.cols()];
        for r in 0..x.rows() {
            for (o, v) in out.iter_mut().zip(x.row(r)) {
                *o += v;
            }
        }
        let inv = 1.0 / x.rows() as f64;
        out.iter_mut().for_each(|o| *o *= inv);
        let v = Tensor::new(1, x.cols(), out);
        self.push(v, Op::MeanRows(a), "mean_rows")
    }

    /// `r × 1` row sums.
    pub fn sum_cols(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let out = (0..x.rows()).map(|r| x.row(r).iter().sum()).collect();
        let v = Tensor::new(x.rows(), 1, out);
        self.push(v, Op::SumCols(a), "sum_cols")
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let v = Tensor::scalar(self.value(a).sum());
        self.push(v, Op::SumAll(a), "sum_all")
    }

    pub fn mean_all(&mut self, a: Var) -> Var {
        let n = self.value(a).len() as f64;
        let s = self.sum_all(a);
        self.scale(s, 1.0 / n)
    }

    pub fn log_softmax_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut out = x.clone();
        let cols = x.cols();
        for row in out.data_mut().chunks_mut(cols) {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            row.iter_mut().for_each(|v| *v -= lse);
        }
        self.push(out, Op::LogSoftmaxRows(a), "log_softmax")
    }

    /// `out[r] = a[r, idx[r]]`, an `r × 1` column.
    pub fn pick_per_row(&mut self, a: Var, idx: Arc<Vec<usize>>) -> Var {
        let x = self.value(a);
        assert_eq!(idx.len(), x.rows());
        let out = idx.iter().enumerate().map(|(r, &c)| x.get(r, c)).collect();
        let v = Tensor::new(x.rows(), 1, out);
        self.push(v, Op::PickPerRow(a, idx), "pick_per_row")
    }

    /// `x · W + b` for parameters `w` and `b`.
    pub fn linear(&mut self, x: Var, w: ParamId, b: ParamId) -> Var {
        let w = self.param(w);
        let b = self.param(b);
        let xw = self.matmul(x, w);
        self.add_row(xw, b)
    }

    /// Gradients of the scalar `loss` with respect to every parameter.
    pub fn backward(&self, loss: Var) -> Result<Gradients, NeuralError> {
        let mut out = Gradients::zeros_like(self.params);
        self.backward_into(loss, 1.0, &mut out)?;
        Ok(out)
    }

    /// Accumulates `scale · ∂loss/∂θ` into `out`.
    pub fn backward_into(
        &self,
        loss: Var,
        scale: f64,
        out: &mut Gradients,
    ) -> Result<(), NeuralError> {
        self.check_finite()?;
        let shape = self.value(loss).shape();
        if shape != [1, 1] {
            return Err(NeuralError::Shape(format!(
                "loss must be scalar, got {shape:?}"
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::scalar(scale));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => out.get_mut(*id).add_assign(&g),
                Op::MatMul(a, b) => {
                    let ga = g.matmul_t(self.value(*b));
                    let gb = self.value(*a).t_matmul(&g);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g);
                }
                Op::Sub(a, b) => {
                    acc(&mut grads, *b, g.map(|v| -v));
                    acc(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    acc(&mut grads, *a, g.zip_map(self.value(*b), |x, y| x * y));
                    acc(&mut grads, *b, g.zip_map(self.value(*a), |x, y| x * y));
                }
                Op::AddRow(a, row) => {
                    let mut gr = vec![0.0; g.cols()];
                    for r in 0..g.rows() {
                        for (o, v) in gr.iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                    acc(&mut grads, *row, Tensor::new(1, g.cols(), gr));
                    acc(&mut grads, *a, g);
                }
                Op::Scale(a, s) => acc(&mut grads, *a, g.map(|v| v * s)),
                Op::AddScalar(a) => acc(&mut grads, *a, g),
                Op::Sigmoid(a) => acc(
                    &mut grads,
                    *a,
                    g.zip_map(&node.value, |g, y| g * y * (1.0 - y)),
                ),
                Op::Tanh(a) => acc(
                    &mut grads,
                    *a,
                    g.zip_map(&node.value, |g, y| g * (1.0 - y * y)),
                ),
                Op::Exp(a) => acc(&mut grads, *a, g.zip_map(&node.value, |g, y| g * y)),
                Op::Square(a) => acc(
                    &mut grads,
                    *a,
                    g.zip_map(self.value(*a), |g, x| 2.0 * g * x),
                ),
                Op::Clamp(a, lo, hi) => {
                    let (lo, hi) = (*lo, *hi);
                    let ga = g.zip_map(
                        self.value(*a),
                        |g, x| if x >= lo && x <= hi { g } else { 0.0 },
                    );
                    acc(&mut grads, *a, ga);
                }
                Op::Min(a, b) => {
                    let (xa, xb) = (self.value(*a), self.value(*b));
                    let mut ga = g.clone();
                    let mut gb = g;
                    for ((pa, pb), (va, vb)) in ga
                        .data_mut()
                        .iter_mut()
                        .zip(gb.data_mut())
                        .zip(xa.data().iter().zip(xb.data()))
                    {
                        if va <= vb {
                            *pb = 0.0;
                        } else {
                            *pa = 0.0;
                        }
                    }
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::BlockMatMul { adj, input, blocks } => {
                    let n = adj.rows();
                    let c = g.cols();
                    let mut gi = Vec::with_capacity(g.len());
                    for b in 0..*blocks {
                        let gb = Tensor::new(n, c, g.data()[b * n * c..(b + 1) * n * c].to_vec());
                        gi.extend(adj.t_matmul(&gb).into_data());
                    }
                    acc(&mut grads, *input, Tensor::new(n * blocks, c, gi));
                }
                Op::BlockMean { input, blocks } => {
                    let inv = 1.0 / *blocks as f64;
                    let mut gi = Vec::with_capacity(g.len() * blocks);
                    for _ in 0..*blocks {
                        gi.extend(g.data().iter().map(|v| v * inv));
                    }
                    acc(
                        &mut grads,
                        *input,
                        Tensor::new(g.rows() * blocks, g.cols(), gi),
                    );
                }
                Op::GatherRows(a, idx) => {
                    let src = self.value(*a);
                    let mut ga = Tensor::zeros(src.rows(), src.cols());
                    let cols = src.cols();
                    for (r, &i) in idx.iter().enumerate() {
                        let dst = &mut ga.data_mut()[i * cols..(i + 1) * cols];
                        for (d, v) in dst.iter_mut().zip(g.row(r)) {
                            *d += v;
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let pc = self.value(p).cols();
                        let mut gp = Vec::with_capacity(g.rows() * pc);
                        for r in 0..g.rows() {
                            gp.extend_from_slice(&g.row(r)[offset..offset + pc]);
                        }
                        acc(&mut grads, p, Tensor::new(g.rows(), pc, gp));
                        offset += pc;
                    }
                }
                Op::MeanRows(a) => {
                    let rows = self.value(*a).rows();
                    let inv = 1.0 / rows as f64;
                    let mut gi = Vec::with_capacity(rows * g.cols());
                    for _ in 0..rows {
                        gi.extend(g.data().iter().map(|v| v * inv));
                    }
                    acc(&mut grads, *a, Tensor::new(rows, g.cols(), gi));
                }
                Op::SumCols(a) => {
                    let cols = self.value(*a).cols();
                    let gi = g
                        .data()
                        .iter()
                        .flat_map(|&v| std::iter::repeat_n(v, cols))
                        .collect();
                    acc(&mut grads, *a, Tensor::new(g.rows(), cols, gi));
                }
                Op::SumAll(a) => {
                    let x = self.value(*a);
                    acc(&mut grads, *a, Tensor::filled(x.rows(), x.cols(), g.item()));
                }
                Op::LogSoftmaxRows(a) => {
                    let y = &node.value;
                    let cols = y.cols();
                    let mut ga = g.clone();
                    for (r, row) in ga.data_mut().chunks_mut(cols).enumerate() {
                        let gsum: f64 = g.row(r).iter().sum();
                        for (c, v) in row.iter_mut().enumerate() {
                            *v -= y.get(r, c).exp() * gsum;
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::PickPerRow(a, idx) => {
                    let x = self.value(*a);
                    let mut ga = Tensor::zeros(x.rows(), x.cols());
                    let cols = x.cols();
                    for (r, &c) in idx.iter().enumerate() {
                        ga.data_mut()[r * cols + c] = g.data()[r];
                    }
                    acc(&mut grads, *a, ga);
                }
            }
        }
        Ok(())
    }
}

fn acc(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
        Tensor::new(
            rows,
            cols,
            (0..rows * cols)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
        )
    }

    /// Compares backward against central differences for every parameter entry.
    fn check(store: &mut ParamStore, f: impl Fn(&mut Graph) -> Var) {
        let g = {
            let mut graph = Graph::new(store);
            let loss = f(&mut graph);
            graph.backward(loss).unwrap()
        };
        let h = 1e-6;
        for id in store.ids().collect::<Vec<_>>() {
            for k in 0..store.get(id).len() {
                let orig = store.get(id).data()[k];
                store.get_mut(id).data_mut()[k] = orig + h;
                let up = {
                    let mut graph = Graph::new(store);
                    let l = f(&mut graph);
                    graph.value(l).item()
                };
                store.get_mut(id).data_mut()[k] = orig - h;
                let down = {
                    let mut graph = Graph::new(store);
                    let l = f(&mut graph);
                    graph.value(l).item()
                };
                store.get_mut(id).data_mut()[k] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = g.get(id).data()[k];
                let err = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
                assert!(
                    err < 1e-5,
                    "{} [{k}]: numeric {numeric} vs analytic {analytic}",
                    store.name(id)
                );
            }
        }
    }

    #[test]
    fn sum_gives_ones_and_square_gives_double() {
        let mut store = ParamStore::new();
        let w = store.insert("w", Tensor::new(2, 2, vec![1.0, -2.0, 3.0, 0.5]));
        let mut graph = Graph::new(&store);
        let x = graph.param(w);
        let s = graph.sum_all(x);
        let g = graph.backward(s).unwrap();
        assert!(g.get(w).data().iter().all(|&v| v == 1.0));

        let x = graph.param(w);
        let sq = graph.square(x);
        let n = graph.sum_all(sq);
        let g = graph.backward(n).unwrap();
        assert_eq!(g.get(w).data(), &[2.0, -4.0, 6.0, 1.0]);
    }

    #[test]
    fn elementwise_ops_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::new();
        let a = store.insert("a", random(&mut rng, 3, 4));
        let b = store.insert("b", random(&mut rng, 3, 4));
        let row = store.insert("row", random(&mut rng, 1, 4));
        check(&mut store, |g| {
            let (x, y, r) = (g.param(a), g.param(b), g.param(row));
            let s = g.sigmoid(x);
            let t = g.tanh(y);
            let m = g.mul(s, t);
            let e = g.exp(m);
            let d = g.sub(e, x);
            let q = g.add_row(d, r);
            let mn = g.min(q, y);
            let c = g.clamp(mn, -0.7, 0.9);
            let om = g.one_minus(c);
            let sq = g.square(om);
            let sum = g.add(sq, x);
            g.mean_all(sum)
        });
    }

    #[test]
    fn structural_ops_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut store = ParamStore::new();
        let x = store.insert("x", random(&mut rng, 6, 3));
        let w = store.insert("w", random(&mut rng, 3, 4));
        let e = store.insert("e", random(&mut rng, 2, 2));
        let adj = Arc::new(random(&mut rng, 3, 3));
        let node_idx = Arc::new(vec![0, 0, 1, 1, 2, 2]);
        let type_idx = Arc::new(vec![0, 1, 0, 1, 0, 1]);
        let pick = Arc::new(vec![2, 0, 1, 3, 3, 0]);
        check(&mut store, |g| {
            let xv = g.param(x);
            let prop = g.block_matmul(&adj, xv, 2);
            let wv = g.param(w);
            let proj = g.matmul(prop, wv);
            let h = g.block_mean(proj, 2);
            let hg = g.gather_rows(h, Arc::clone(&node_idx));
            let ev = g.param(e);
            let eg = g.gather_rows(ev, Arc::clone(&type_idx));
            let z = g.concat_cols(&[hg, eg]);
            let ls = g.log_softmax_rows(z);
            let p = g.pick_per_row(ls, Arc::clone(&pick));
            let probs = g.exp(ls);
            let ent = g.mul(probs, ls);
            let ent = g.sum_cols(ent);
            let pooled = g.mean_rows(z);
            let a = g.sum_all(p);
            let b = g.sum_all(ent);
            let c = g.sum_all(pooled);
            let ab = g.add(a, b);
            g.add(ab, c)
        });
    }

    #[test]
    fn log_softmax_values() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let x = g.constant(Tensor::new(1, 3, vec![1.0, 2.0, 3.0]));
        let ls = g.log_softmax_rows(x);
        let p: Vec<f64> = g.value(ls).data().iter().map(|v| v.exp()).collect();
        for (got, want) in p.iter().zip([0.0900, 0.2447, 0.6652]) {
            assert!((got - want).abs() < 5e-5);
        }
    }

    #[test]
    fn non_finite_is_reported() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let x = g.constant(Tensor::scalar(1000.0));
        let y = g.exp(x);
        assert!(matches!(g.backward(y), Err(NeuralError::NonFinite("exp"))));
    }
}
