//! A small fully-connected network with ReLU hidden layers, an identity
//! output layer, hand-written backpropagation and the Adam update.
//!
//! Weights of a layer are stored input-major: `weights[i * outputs + o]` is
//! the connection from input `i` to output `o`. With this layout both the
//! forward pass and the weight gradient are row-wise `axpy` loops.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{cast, from_count, Scalar};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("input has {got} features, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("action {action} out of range for {outputs} outputs")]
    ActionOutOfRange { action: usize, outputs: usize },
    #[error("invalid layer sizes {0:?}: need at least two positive sizes")]
    InvalidSizes(Vec<usize>),
    #[error("parameter shapes do not match")]
    ShapeMismatch,
    #[error("malformed parameter file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NnError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![T::zero(); inputs * outputs],
            biases: vec![T::zero(); outputs],
        }
    }

    #[inline]
    pub fn weight(&self, input: usize, output: usize) -> T {
        self.weights[input * self.outputs + output]
    }

    /// `out = biases + x · W` for one row.
    fn apply(&self, x: &[T], out: &mut [T]) {
        out.copy_from_slice(&self.biases);
        for (i, xi) in x.iter().enumerate() {
            if *xi != T::zero() {
                axpy(*xi, &self.weights[i * self.outputs..(i + 1) * self.outputs], out);
            }
        }
    }
}

/// Multilayer perceptron. Also used as the container for gradients and
/// optimizer moments, which share the parameter shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    layers: Vec<Dense<T>>,
}

/// Gradient with the same shape as the network parameters.
pub type Gradient<T> = Mlp<T>;

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(NnError::InvalidSizes(sizes.to_vec()));
    }
    Ok(())
}

impl<T: Scalar> Mlp<T> {
    /// Weights ~ N(0, 1/fan_in), biases zero.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        check_sizes(sizes)?;
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let scale = 1.0 / (inputs as f64).sqrt();
                let mut layer = Dense::zeros(inputs, outputs);
                for v in &mut layer.weights {
                    let z: f64 = rng.sample(StandardNormal);
                    *v = cast(z * scale);
                }
                layer
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        check_sizes(sizes)?;
        Ok(Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        })
    }

    pub fn from_layers(layers: Vec<Dense<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(NnError::InvalidSizes(vec![]));
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(NnError::ShapeMismatch);
            }
        }
        if layers.windows(2).any(|w| w[0].outputs != w[1].inputs) {
            return Err(NnError::ShapeMismatch);
        }
        let net = Self { layers };
        check_sizes(&net.sizes())?;
        Ok(net)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].inputs];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        sizes
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_size(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.inputs == b.inputs && a.outputs == b.outputs)
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// All parameters in declaration order (per layer: weights, then biases).
    pub fn params(&self) -> impl Iterator<Item = &T> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }

    pub fn norm(&self) -> T {
        self.params().map(|p| *p * *p).sum::<T>().sqrt()
    }

    pub fn scale(&mut self, c: T) {
        for p in self.params_mut() {
            *p *= c;
        }
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        let mut buf = ForwardBuffer::default();
        Ok(self.forward_with(x, &mut buf)?.to_vec())
    }

    /// Allocation-free forward pass reusing `buf`.
    pub fn forward_with<'b>(&self, x: &[T], buf: &'b mut ForwardBuffer<T>) -> Result<&'b [T]> {
        if x.len() != self.input_size() {
            return Err(NnError::DimensionMismatch {
                expected: self.input_size(),
                got: x.len(),
            });
        }
        buf.a.clear();
        buf.a.extend_from_slice(x);
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            buf.b.resize(layer.outputs, T::zero());
            layer.apply(&buf.a, &mut buf.b);
            if k < last {
                relu(&mut buf.b);
            }
            std::mem::swap(&mut buf.a, &mut buf.b);
        }
        Ok(&buf.a)
    }

    /// Mean squared TD error over `batch` and its gradient.
    pub fn loss_and_gradient(&self, batch: &[Sample<'_, T>]) -> Result<(T, Gradient<T>)> {
        let mut grad = self.zeros_like();
        let mut scratch = BatchScratch::default();
        let loss = self.loss_and_gradient_into(batch, &mut scratch, &mut grad)?;
        Ok((loss, grad))
    }

    /// As [`Mlp::loss_and_gradient`], writing into preallocated buffers.
    pub fn loss_and_gradient_into(
        &self,
        batch: &[Sample<'_, T>],
        scratch: &mut BatchScratch<T>,
        grad: &mut Gradient<T>,
    ) -> Result<T> {
        if batch.is_empty() {
            return Err(NnError::EmptyBatch);
        }
        if !self.same_shape(grad) {
            return Err(NnError::ShapeMismatch);
        }
        let n_in = self.input_size();
        let n_out = self.output_size();
        for s in batch {
            if s.features.len() != n_in {
                return Err(NnError::DimensionMismatch {
                    expected: n_in,
                    got: s.features.len(),
                });
            }
            if s.action >= n_out {
                return Err(NnError::ActionOutOfRange {
                    action: s.action,
                    outputs: n_out,
                });
            }
        }
        let rows = batch.len();
        let depth = self.layers.len();

        // Forward, keeping every layer's post-activation output.
        scratch.acts.resize_with(depth + 1, Vec::new);
        let input = &mut scratch.acts[0];
        input.clear();
        for s in batch {
            input.extend_from_slice(s.features);
        }
        for (k, layer) in self.layers.iter().enumerate() {
            let (done, rest) = scratch.acts.split_at_mut(k + 1);
            let x = &done[k];
            let y = &mut rest[0];
            y.resize(rows * layer.outputs, T::zero());
            for r in 0..rows {
                let out = &mut y[r * layer.outputs..(r + 1) * layer.outputs];
                layer.apply(&x[r * layer.inputs..(r + 1) * layer.inputs], out);
                if k + 1 < depth {
                    relu(out);
                }
            }
        }

        // dL/dq for the selected action only.
        let inv = T::one() / from_count::<T>(rows);
        let two = cast::<T>(2.0);
        let mut loss = T::zero();
        let delta = &mut scratch.delta;
        delta.clear();
        delta.resize(rows * n_out, T::zero());
        let q = &scratch.acts[depth];
        for (r, s) in batch.iter().enumerate() {
            let err = q[r * n_out + s.action] - s.target;
            loss += err * err;
            delta[r * n_out + s.action] = two * err * inv;
        }

        for g in grad.params_mut() {
            *g = T::zero();
        }
        for k in (0..depth).rev() {
            let layer = &self.layers[k];
            let gl = &mut grad.layers[k];
            let x = &scratch.acts[k];
            let (n_i, n_o) = (layer.inputs, layer.outputs);
            for r in 0..rows {
                let d = &scratch.delta[r * n_o..(r + 1) * n_o];
                for (gb, dv) in gl.biases.iter_mut().zip(d) {
                    *gb += *dv;
                }
                for (i, xi) in x[r * n_i..(r + 1) * n_i].iter().enumerate() {
                    if *xi != T::zero() {
                        axpy(*xi, d, &mut gl.weights[i * n_o..(i + 1) * n_o]);
                    }
                }
            }
            if k > 0 {
                // Propagate through W and the ReLU of the layer below.
                scratch.next_delta.clear();
                scratch.next_delta.resize(rows * n_i, T::zero());
                for r in 0..rows {
                    let d = &scratch.delta[r * n_o..(r + 1) * n_o];
                    let xr = &x[r * n_i..(r + 1) * n_i];
                    let nd = &mut scratch.next_delta[r * n_i..(r + 1) * n_i];
                    for i in 0..n_i {
                        if xr[i] > T::zero() {
                            nd[i] = dot(&layer.weights[i * n_o..(i + 1) * n_o], d);
                        }
                    }
                }
                std::mem::swap(&mut scratch.delta, &mut scratch.next_delta);
            }
        }
        Ok(loss * inv)
    }

    /// Writes the plain-text parameter format: a `mlp 1` line, a `sizes`
    /// line, then for each layer `inputs` rows of `outputs` weights followed
    /// by one row of biases. Values use the shortest round-trip decimal form.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "mlp 1")?;
        let sizes: Vec<String> = self.sizes().iter().map(|s| s.to_string()).collect();
        writeln!(w, "sizes {}", sizes.join(" "))?;
        for layer in &self.layers {
            for row in layer.weights.chunks(layer.outputs) {
                write_row(&mut w, row)?;
            }
            write_row(&mut w, &layer.biases)?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next_line = |what: &str| -> Result<String> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| NnError::Parse(format!("unexpected end of file reading {what}")))
        };
        if next_line("header")?.trim() != "mlp 1" {
            return Err(NnError::Parse("missing `mlp 1` header".into()));
        }
        let sizes_line = next_line("sizes")?;
        let mut parts = sizes_line.split_whitespace();
        if parts.next() != Some("sizes") {
            return Err(NnError::Parse("missing `sizes` line".into()));
        }
        let sizes = parts
            .map(|p| p.parse::<usize>().map_err(|e| NnError::Parse(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let mut net = Self::zeros(&sizes)?;
        for layer in &mut net.layers {
            let outputs = layer.outputs;
            for row in layer.weights.chunks_mut(outputs) {
                parse_row(&next_line("weights")?, row)?;
            }
            parse_row(&next_line("biases")?, &mut layer.biases)?;
        }
        Ok(net)
    }
}

fn write_row<W: Write, T: Scalar>(w: &mut W, row: &[T]) -> Result<()> {
    let mut first = true;
    for v in row {
        if !first {
            w.write_all(b" ")?;
        }
        write!(w, "{v}")?;
        first = false;
    }
    writeln!(w)?;
    Ok(())
}

fn parse_row<T: Scalar>(line: &str, out: &mut [T]) -> Result<()> {
    let mut n = 0;
    for (slot, tok) in out.iter_mut().zip(line.split_whitespace()) {
        *slot = tok
            .parse::<T>()
            .map_err(|_| NnError::Parse(format!("bad number `{tok}`")))?;
        n += 1;
    }
    if n != out.len() || line.split_whitespace().count() != out.len() {
        return Err(NnError::Parse(format!(
            "expected {} values, found {}",
            out.len(),
            line.split_whitespace().count()
        )));
    }
    Ok(())
}

#[inline]
fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * *xi;
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    const LANES: usize = 8;
    let mut acc = [T::zero(); LANES];
    let split = a.len() - a.len() % LANES;
    for (ca, cb) in a[..split].chunks_exact(LANES).zip(b[..split].chunks_exact(LANES)) {
        for k in 0..LANES {
            acc[k] += ca[k] * cb[k];
        }
    }
    let mut s = acc.iter().copied().sum::<T>();
    for (x, y) in a[split..].iter().zip(&b[split..]) {
        s += *x * *y;
    }
    s
}

#[inline]
fn relu<T: Scalar>(v: &mut [T]) {
    for x in v {
        if *x < T::zero() {
            *x = T::zero();
        }
    }
}

/// One regression sample: input, the action whose output is trained, and its target.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a, T> {
    pub features: &'a [T],
    pub action: usize,
    pub target: T,
}

#[derive(Debug, Clone, Default)]
pub struct ForwardBuffer<T> {
    a: Vec<T>,
    b: Vec<T>,
}

#[derive(Debug, Clone, Default)]
pub struct BatchScratch<T> {
    acts: Vec<Vec<T>>,
    delta: Vec<T>,
    next_delta: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

/// Bias-corrected Adam moments for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Gradient<T>,
    pub v: Gradient<T>,
    pub t: u64,
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(net: &Mlp<T>, cfg: &AdamConfig) -> Self {
        Self {
            m: net.zeros_like(),
            v: net.zeros_like(),
            t: 0,
            learning_rate: cast(cfg.learning_rate),
            beta1: cast(cfg.beta1),
            beta2: cast(cfg.beta2),
            epsilon: cast(cfg.epsilon),
        }
    }
}

/// One Adam update of `net` along `grad`.
pub fn adam_step<T: Scalar>(net: &mut Mlp<T>, grad: &Gradient<T>, opt: &mut AdamState<T>) -> Result<()> {
    if !net.same_shape(grad) || !net.same_shape(&opt.m) || !net.same_shape(&opt.v) {
        return Err(NnError::ShapeMismatch);
    }
    opt.t += 1;
    let t = i32::try_from(opt.t).unwrap_or(i32::MAX);
    let (b1, b2) = (opt.beta1, opt.beta2);
    let c1 = T::one() / (T::one() - b1.powi(t));
    let c2 = T::one() / (T::one() - b2.powi(t));
    let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
    let lr = opt.learning_rate;
    let eps = opt.epsilon;
    let params = net.params_mut();
    let moments = opt.m.params_mut().zip(opt.v.params_mut());
    for ((p, g), (m, v)) in params.zip(grad.params()).zip(moments) {
        *m = b1 * *m + one_b1 * *g;
        *v = b2 * *v + one_b2 * *g * *g;
        let m_hat = *m * c1;
        let v_hat = *v * c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// Rescales `grad` so its Euclidean norm is at most `max_norm`.
pub fn clip_global_norm<T: Scalar>(grad: &mut Gradient<T>, max_norm: T) {
    let norm = grad.norm();
    if norm > max_norm && norm > T::zero() {
        grad.scale(max_norm / norm);
    }
}
