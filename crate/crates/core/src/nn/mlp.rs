use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    /// Derivative expressed through the activation output `a`.
    fn derivative_from_output<T: Real>(self, a: T) -> T {
        match self {
            Activation::Tanh => T::one() - a * a,
            Activation::Relu => {
                if a > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

/// Layer widths from input to output; the activation applies to every
/// layer except the last, which is affine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
}

impl MlpSpec {
    pub fn new(layer_widths: Vec<usize>, activation: Activation) -> Self {
        MlpSpec {
            layer_widths,
            activation,
        }
    }

    /// `input → depth × width (activated) → output`.
    pub fn hidden(input: usize, depth: usize, width: usize, output: usize) -> Self {
        let mut w = Vec::with_capacity(depth + 2);
        w.push(input);
        w.extend(std::iter::repeat_n(width, depth));
        w.push(output);
        MlpSpec::new(w, Activation::Tanh)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 {
            return Err(Error::validation("an MLP needs at least an input and an output width"));
        }
        if self.layer_widths.contains(&0) {
            return Err(Error::validation("MLP layer widths must be positive"));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_widths.last().expect("validated spec")
    }

    pub fn n_layers(&self) -> usize {
        self.layer_widths.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.layer_widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Parameters of one MLP, stored flat: per layer, the `out × in` weight
/// matrix (row-major) followed by the bias.
#[derive(Debug)]
pub struct Mlp<T: Real> {
    spec: MlpSpec,
    params: Vec<T>,
    grads: Vec<T>,
    offsets: Vec<usize>,
    id: u64,
    version: u64,
}

impl<T: Real> Clone for Mlp<T> {
    fn clone(&self) -> Self {
        Mlp {
            spec: self.spec.clone(),
            params: self.params.clone(),
            grads: self.grads.clone(),
            offsets: self.offsets.clone(),
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            version: 0,
        }
    }
}

/// Layer activations kept from a forward pass.
#[derive(Debug, Clone)]
pub struct MlpCache<T> {
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<T>>,
    batch: usize,
    owner: u64,
    version: u64,
}

impl<T: Real> MlpCache<T> {
    pub fn output(&self) -> &[T] {
        self.acts.last().expect("non-empty cache")
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Output of layer `l` (0-based), or the input for `None`.
    pub fn layer_output(&self, l: Option<usize>) -> &[T] {
        match l {
            None => &self.acts[0],
            Some(l) => &self.acts[l + 1],
        }
    }
}

/// Glorot-uniform weights, zero biases, deterministic per seed.
pub fn init_mlp<T: Real>(spec: &MlpSpec, seed: u64) -> Result<Mlp<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Vec::with_capacity(spec.param_count());
    for w in spec.layer_widths.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        params.extend((0..fan_in * fan_out).map(|_| T::of(rng.gen_range(-limit..limit))));
        params.extend(std::iter::repeat_n(T::zero(), fan_out));
    }
    Mlp::from_params(spec.clone(), params)
}

impl<T: Real> Mlp<T> {
    pub fn from_params(spec: MlpSpec, params: Vec<T>) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.param_count() {
            return Err(Error::Shape {
                what: "MLP parameter vector",
                expected: spec.param_count(),
                got: params.len(),
            });
        }
        let mut offsets = Vec::with_capacity(spec.n_layers() + 1);
        let mut off = 0;
        for w in spec.layer_widths.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }
        offsets.push(off);
        let n = params.len();
        Ok(Mlp {
            spec,
            params,
            grads: vec![T::zero(); n],
            offsets,
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            version: 0,
        })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    /// Mutable parameter access; invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut [T] {
        self.version += 1;
        &mut self.params
    }

    pub fn grads(&self) -> &[T] {
        &self.grads
    }

    /// Parameters and gradients together, for optimizer updates.
    pub fn params_and_grads(&mut self) -> (&mut [T], &[T]) {
        self.version += 1;
        (&mut self.params, &self.grads)
    }

    pub fn zero_grad(&mut self) {
        self.grads.iter_mut().for_each(|g| *g = T::zero());
    }

    fn dims(&self, l: usize) -> (usize, usize) {
        (self.spec.layer_widths[l], self.spec.layer_widths[l + 1])
    }

    /// Weight matrix of layer `l`, `out × in` row-major.
    pub fn weight(&self, l: usize) -> &[T] {
        let (i, o) = self.dims(l);
        &self.params[self.offsets[l]..self.offsets[l] + i * o]
    }

    pub fn bias(&self, l: usize) -> &[T] {
        let (i, o) = self.dims(l);
        let start = self.offsets[l] + i * o;
        &self.params[start..start + o]
    }

    pub fn cast<U: Real>(&self) -> Mlp<U> {
        let params = self.params.iter().map(|&p| U::of(p.f64())).collect();
        Mlp::from_params(self.spec.clone(), params).expect("same spec")
    }

    fn check_input(&self, input: &[T], batch: usize) -> Result<()> {
        let w = self.spec.input_width();
        if input.len() != batch * w {
            return Err(Error::Shape {
                what: "MLP input batch",
                expected: batch * w,
                got: input.len(),
            });
        }
        Ok(())
    }

    /// One affine layer plus optional activation: `out = act(x·Wᵀ + b)`.
    fn layer_forward(&self, l: usize, x: &[T], batch: usize, out: &mut Vec<T>) {
        let (fi, fo) = self.dims(l);
        let w = self.weight(l);
        let b = self.bias(l);
        out.clear();
        out.reserve(batch * fo);
        for _ in 0..batch {
            out.extend_from_slice(b);
        }
        T::gemm(batch, fi, fo, T::one(), x, fi as isize, 1, w, 1, fi as isize, T::one(), out, fo as isize, 1);
        if l + 1 < self.spec.n_layers() {
            match self.spec.activation {
                Activation::Tanh => out.iter_mut().for_each(|v| *v = v.act_tanh()),
                Activation::Relu => out.iter_mut().for_each(|v| *v = v.max(T::zero())),
            }
        }
    }

    /// Forward pass over a row-major `batch × input_width` matrix, keeping
    /// every layer's output for [`Mlp::backward`].
    pub fn forward(&self, input: &[T], batch: usize) -> Result<MlpCache<T>> {
        self.check_input(input, batch)?;
        let mut acts = Vec::with_capacity(self.spec.n_layers() + 1);
        acts.push(input.to_vec());
        for l in 0..self.spec.n_layers() {
            let mut out = Vec::new();
            self.layer_forward(l, &acts[l], batch, &mut out);
            acts.push(out);
        }
        Ok(MlpCache {
            acts,
            batch,
            owner: self.id,
            version: self.version,
        })
    }

    /// Forward pass without keeping intermediate activations.
    pub fn predict(&self, input: &[T], batch: usize) -> Result<Vec<T>> {
        const BLOCK: usize = 512;
        self.check_input(input, batch)?;
        let (w_in, w_out) = (self.spec.input_width(), self.spec.output_width());
        let mut out = Vec::with_capacity(batch * w_out);
        let (mut cur, mut next) = (Vec::new(), Vec::new());
        for rows in input.chunks(BLOCK * w_in) {
            let n = rows.len() / w_in;
            self.layer_forward(0, rows, n, &mut cur);
            for l in 1..self.spec.n_layers() {
                self.layer_forward(l, &cur, n, &mut next);
                std::mem::swap(&mut cur, &mut next);
            }
            out.extend_from_slice(&cur);
        }
        Ok(out)
    }

    /// Reverse pass. Accumulates parameter gradients into the internal
    /// buffer and returns the gradient with respect to the input batch.
    pub fn backward(&mut self, cache: &MlpCache<T>, d_out: &[T]) -> Result<Vec<T>> {
        if cache.owner != self.id || cache.version != self.version {
            return Err(Error::StaleCache);
        }
        let batch = cache.batch;
        let n_layers = self.spec.n_layers();
        let expected = batch * self.spec.output_width();
        if d_out.len() != expected {
            return Err(Error::Shape {
                what: "MLP output gradient",
                expected,
                got: d_out.len(),
            });
        }
        let act = self.spec.activation;
        let mut delta = d_out.to_vec();
        for l in (0..n_layers).rev() {
            let (fi, fo) = self.dims(l);
            if l + 1 < n_layers {
                for (d, &a) in delta.iter_mut().zip(&cache.acts[l + 1]) {
                    *d *= act.derivative_from_output(a);
                }
            }
            let x = &cache.acts[l];
            let off = self.offsets[l];
            {
                let (gw, gb) = self.grads[off..off + fi * fo + fo].split_at_mut(fi * fo);
                // dW += δᵀ·x
                T::gemm(fo, batch, fi, T::one(), &delta, 1, fo as isize, x, fi as isize, 1, T::one(), gw, fi as isize, 1);
                for row in delta.chunks_exact(fo) {
                    for (g, &d) in gb.iter_mut().zip(row) {
                        *g += d;
                    }
                }
            }
            // δ_prev = δ·W
            let mut prev = vec![T::zero(); batch * fi];
            let w = &self.params[off..off + fi * fo];
            T::gemm(batch, fo, fi, T::one(), &delta, fo as isize, 1, w, fi as isize, 1, T::zero(), &mut prev, fi as isize, 1);
            delta = prev;
        }
        Ok(delta)
    }
}
