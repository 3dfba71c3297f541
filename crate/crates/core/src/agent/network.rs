//! Duelling Q-network: ReLU trunk, one linear head emitting `[V, A_1..A_n]`,
//! and the aggregation `Q = V + A - mean(A)`.
//!
//! All weights and biases live in one flat vector so the optimizer and the
//! checkpoint code can treat the network as a single tensor.

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::num::{gemm, MatRef, Real};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkShape {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub actions: usize,
}

impl NetworkShape {
    pub fn paper() -> Self {
        Self { input: 2, hidden: vec![512, 256, 128], actions: crate::mdp::NUM_ACTIONS }
    }

    /// `(fan_in, fan_out)` of every dense layer, head last.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut prev = self.input;
        for &h in &self.hidden {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, 1 + self.actions));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.actions == 0 || self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::param("network", "layer widths must be positive"));
        }
        Ok(())
    }
}

/// Offsets of one dense layer inside the flat parameter vector.
/// Weights are stored row-major as `fan_out x fan_in`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSlot {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weight: usize,
    pub bias: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    shape: NetworkShape,
    layers: Vec<LayerSlot>,
    params: Vec<T>,
}

/// Activations kept from a batched forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    pub batch: usize,
    /// `activations[0]` is the input; `activations[l]` the output of layer `l-1`.
    activations: Vec<Vec<T>>,
    /// Row-major `batch x actions`.
    pub q: Vec<T>,
}

impl<T: Real> ForwardCache<T> {
    pub fn q_row(&self, i: usize, actions: usize) -> &[T] {
        &self.q[i * actions..(i + 1) * actions]
    }
}

fn layout(shape: &NetworkShape) -> Vec<LayerSlot> {
    let mut off = 0;
    shape
        .layer_dims()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let slot = LayerSlot { fan_in, fan_out, weight: off, bias: off + fan_in * fan_out };
            off += fan_in * fan_out + fan_out;
            slot
        })
        .collect()
}

impl<T: Real> Network<T> {
    pub fn zeros(shape: NetworkShape) -> Self {
        let layers = layout(&shape);
        let params = vec![T::zero(); shape.param_count()];
        Self { shape, layers, params }
    }

    /// He-uniform weights, `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`, zero biases.
    pub fn init<R: Rng + ?Sized>(shape: NetworkShape, rng: &mut R) -> Self {
        let mut net = Self::zeros(shape);
        for l in net.layers.clone() {
            let bound = (6.0 / l.fan_in as f64).sqrt();
            for w in &mut net.params[l.weight..l.bias] {
                *w = T::lit(rng.random_range(-bound..bound));
            }
        }
        net
    }

    pub fn from_params(shape: NetworkShape, params: Vec<T>) -> Result<Self> {
        if params.len() != shape.param_count() {
            return Err(Error::param("params", format!("expected {} values, got {}", shape.param_count(), params.len())));
        }
        let layers = layout(&shape);
        Ok(Self { shape, layers, params })
    }

    pub fn shape(&self) -> &NetworkShape {
        &self.shape
    }

    pub fn layers(&self) -> &[LayerSlot] {
        &self.layers
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn actions(&self) -> usize {
        self.shape.actions
    }

    pub fn weights(&self, layer: usize) -> &[T] {
        let l = self.layers[layer];
        &self.params[l.weight..l.bias]
    }

    pub fn bias(&self, layer: usize) -> &[T] {
        let l = self.layers[layer];
        &self.params[l.bias..l.bias + l.fan_out]
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    pub fn copy_from(&mut self, other: &Network<T>) {
        assert_eq!(self.shape, other.shape, "network shapes differ");
        self.params.copy_from_slice(&other.params);
    }

    /// SHA-256 over the shape and the exact parameter bits.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("{:?}", self.shape).as_bytes());
        for p in &self.params {
            h.update(p.to_f64_lossy().to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Q-values for one input.
    pub fn forward(&self, x: &[T]) -> Vec<T> {
        self.forward_batch(x, 1).q
    }

    /// Forward pass over `batch` row-major inputs.
    pub fn forward_batch(&self, x: &[T], batch: usize) -> ForwardCache<T> {
        assert_eq!(x.len(), batch * self.shape.input, "input batch has the wrong size");
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(batch * l.fan_out);
            let b = self.bias(li);
            for _ in 0..batch {
                out.extend_from_slice(b);
            }
            let input = activations.last().expect("input present");
            let w = MatRef::new(&self.params[l.weight..l.bias], l.fan_out, l.fan_in);
            gemm(T::one(), MatRef::new(input, batch, l.fan_in), w.t(), T::one(), &mut out);
            if li != last {
                for v in &mut out {
                    if *v < T::zero() {
                        *v = T::zero();
                    }
                }
            }
            activations.push(out);
        }
        let q = aggregate(activations.last().expect("head present"), batch, self.shape.actions);
        ForwardCache { batch, activations, q }
    }

    /// Parameter gradient given `dL/dQ` (row-major `batch x actions`).
    pub fn backward(&self, cache: &ForwardCache<T>, dq: &[T]) -> Vec<T> {
        let batch = cache.batch;
        let n = self.shape.actions;
        assert_eq!(dq.len(), batch * n);
        let mut grad = vec![T::zero(); self.params.len()];
        // head output is [V, A_1..A_n]
        let inv_n = T::one() / T::from_usize(n).unwrap();
        let mut delta = Vec::with_capacity(batch * (n + 1));
        for row in dq.chunks(n) {
            let s: T = row.iter().copied().sum();
            delta.push(s);
            delta.extend(row.iter().map(|&g| g - s * inv_n));
        }
        for li in (0..self.layers.len()).rev() {
            let l = self.layers[li];
            let input = &cache.activations[li];
            let d = MatRef::new(&delta, batch, l.fan_out);
            gemm(T::one(), d.t(), MatRef::new(input, batch, l.fan_in), T::zero(), &mut grad[l.weight..l.bias]);
            let gb = &mut grad[l.bias..l.bias + l.fan_out];
            for row in delta.chunks(l.fan_out) {
                for (g, &v) in gb.iter_mut().zip(row) {
                    *g += v;
                }
            }
            if li == 0 {
                break;
            }
            let mut prev = vec![T::zero(); batch * l.fan_in];
            let w = MatRef::new(&self.params[l.weight..l.bias], l.fan_out, l.fan_in);
            gemm(T::one(), d, w, T::zero(), &mut prev);
            for (p, &a) in prev.iter_mut().zip(input) {
                if a <= T::zero() {
                    *p = T::zero();
                }
            }
            delta = prev;
        }
        grad
    }
}

/// `Q = V + A - mean(A)` per row of `[V, A_1..A_n]`.
fn aggregate<T: Real>(head: &[T], batch: usize, n: usize) -> Vec<T> {
    let inv_n = T::one() / T::from_usize(n).unwrap();
    let mut q = Vec::with_capacity(batch * n);
    for row in head.chunks(n + 1) {
        let v = row[0];
        let adv = &row[1..];
        let mean = adv.iter().copied().sum::<T>() * inv_n;
        q.extend(adv.iter().map(|&a| v + a - mean));
    }
    q
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: Real>(q: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}
