use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{init_mlp, FourierEmbedding, FourierSpec, Mlp, MlpCache, MlpSpec, Real};

/// The four branch/trunk arrangements for feeding `cv` to the operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// `cv` appended to the branch input.
    #[serde(rename = "M1_BRANCH_CONCAT")]
    M1,
    /// `cv` through an auxiliary branch, merged with the main branch latent.
    #[serde(rename = "M2_AUX_BRANCH_MERGE")]
    M2,
    /// `cv` appended to the trunk input `(z, t, cv)`.
    #[serde(rename = "M3_TRUNK_CV")]
    M3,
    /// As M3, with the trunk input passed through a Fourier embedding.
    #[serde(rename = "M4_TRUNK_CV_FOURIER")]
    M4,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::M1, Variant::M2, Variant::M3, Variant::M4];

    /// Parses `1`..`4`, `m1`..`m4` or the long names.
    pub fn parse(s: &str) -> Result<Variant> {
        match s.trim().to_ascii_uppercase().as_str() {
            "1" | "M1" | "M1_BRANCH_CONCAT" => Ok(Variant::M1),
            "2" | "M2" | "M2_AUX_BRANCH_MERGE" => Ok(Variant::M2),
            "3" | "M3" | "M3_TRUNK_CV" => Ok(Variant::M3),
            "4" | "M4" | "M4_TRUNK_CV_FOURIER" => Ok(Variant::M4),
            _ => Err(Error::validation(format!("unknown model variant {s:?} (expected 1-4)"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::M1 => "M1",
            Variant::M2 => "M2",
            Variant::M3 => "M3",
            Variant::M4 => "M4",
        }
    }

    fn cv_in_trunk(self) -> bool {
        matches!(self, Variant::M3 | Variant::M4)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub m_sensors: usize,
    pub q: usize,
    pub branch: MlpSpec,
    pub trunk: MlpSpec,
    /// M2 only: `1 → … → q`.
    pub aux: Option<MlpSpec>,
    /// M2 only: `2q → … → q`.
    pub merge: Option<MlpSpec>,
    /// M4 only.
    pub fourier: Option<FourierSpec>,
}

/// Hidden layers of the M2 merge net.
pub const MERGE_DEPTH: usize = 2;

impl ModelSpec {
    /// Sub-networks with `depth` hidden tanh layers of `width`; the merge net
    /// has [`MERGE_DEPTH`] hidden layers.
    pub fn new(variant: Variant, m: usize, q: usize, depth: usize, width: usize, fourier: FourierSpec) -> Result<Self> {
        if m == 0 || q == 0 || width == 0 {
            return Err(Error::validation("m, q and width must be positive"));
        }
        let (branch_in, trunk_in) = match variant {
            Variant::M1 => (m + 1, 2),
            Variant::M2 => (m, 2),
            Variant::M3 => (m, 3),
            Variant::M4 => (m, 2 * fourier.m_freq),
        };
        let spec = ModelSpec {
            variant,
            m_sensors: m,
            q,
            branch: MlpSpec::hidden(branch_in, depth, width, q),
            trunk: MlpSpec::hidden(trunk_in, depth, width, q),
            aux: (variant == Variant::M2).then(|| MlpSpec::hidden(1, depth, width, q)),
            merge: (variant == Variant::M2).then(|| MlpSpec::hidden(2 * q, MERGE_DEPTH, width, q)),
            fourier: (variant == Variant::M4).then_some(fourier),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// 6 hidden layers of 30, `q = 50`, Fourier `m = 50`, `σ = 1`.
    pub fn paper(variant: Variant, m: usize) -> Result<Self> {
        ModelSpec::new(variant, m, 50, 6, 30, FourierSpec::default())
    }

    pub fn validate(&self) -> Result<()> {
        let nets = [Some(&self.branch), Some(&self.trunk), self.aux.as_ref(), self.merge.as_ref()];
        for net in nets.into_iter().flatten() {
            net.validate()?;
        }
        let shape = |what: &'static str, expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(Error::Shape { what, expected, got })
            }
        };
        let m = self.m_sensors;
        let q = self.q;
        shape("branch output width", q, self.branch.output_width())?;
        shape("trunk output width", q, self.trunk.output_width())?;
        let is_m2 = self.variant == Variant::M2;
        if is_m2 != (self.aux.is_some() && self.merge.is_some()) || (!is_m2 && (self.aux.is_some() || self.merge.is_some())) {
            return Err(Error::validation("aux and merge nets are required for M2 and only M2"));
        }
        if (self.variant == Variant::M4) != self.fourier.is_some() {
            return Err(Error::validation("a Fourier embedding is required for M4 and only M4"));
        }
        match self.variant {
            Variant::M1 => {
                shape("branch input width", m + 1, self.branch.input_width())?;
                shape("trunk input width", 2, self.trunk.input_width())?;
            }
            Variant::M2 => {
                let aux = self.aux.as_ref().unwrap();
                let merge = self.merge.as_ref().unwrap();
                shape("branch input width", m, self.branch.input_width())?;
                shape("aux input width", 1, aux.input_width())?;
                shape("aux output width", q, aux.output_width())?;
                shape("merge input width", 2 * q, merge.input_width())?;
                shape("merge output width", q, merge.output_width())?;
                shape("trunk input width", 2, self.trunk.input_width())?;
            }
            Variant::M3 => {
                shape("branch input width", m, self.branch.input_width())?;
                shape("trunk input width", 3, self.trunk.input_width())?;
            }
            Variant::M4 => {
                let f = self.fourier.unwrap();
                shape("branch input width", m, self.branch.input_width())?;
                shape("trunk input width", 2 * f.m_freq, self.trunk.input_width())?;
            }
        }
        Ok(())
    }

    /// Width of the raw coordinate vector before any embedding.
    pub fn coord_width(&self) -> usize {
        if self.variant.cv_in_trunk() {
            3
        } else {
            2
        }
    }

    pub fn param_count(&self) -> usize {
        [Some(&self.branch), Some(&self.trunk), self.aux.as_ref(), self.merge.as_ref()]
            .into_iter()
            .flatten()
            .map(MlpSpec::param_count)
            .sum()
    }
}

/// Network inputs for one query, before any Fourier embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledInputs {
    pub branch: Vec<f64>,
    /// M2 only: `[cv]`.
    pub aux: Option<Vec<f64>>,
    /// `(z, t)` or `(z, t, cv)`.
    pub trunk: Vec<f64>,
}

/// Routes standardized `u0`, `cv` and `(z, t)` to the variant's inputs.
pub fn assemble_inputs(spec: &ModelSpec, branch: &[f64], cv: f64, z: f64, t: f64) -> Result<AssembledInputs> {
    if branch.len() != spec.m_sensors {
        return Err(Error::Shape {
            what: "branch sensor vector",
            expected: spec.m_sensors,
            got: branch.len(),
        });
    }
    let mut b = branch.to_vec();
    let mut aux = None;
    let mut trunk = vec![z, t];
    match spec.variant {
        Variant::M1 => b.push(cv),
        Variant::M2 => aux = Some(vec![cv]),
        Variant::M3 | Variant::M4 => trunk.push(cv),
    }
    Ok(AssembledInputs { branch: b, aux, trunk })
}

/// A batch of assembled inputs, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct InputBatch<T> {
    pub batch: usize,
    pub branch: Vec<T>,
    /// M2 only, `batch × 1`.
    pub aux: Vec<T>,
    /// Raw coordinates, `batch × coord_width`.
    pub coords: Vec<T>,
}

impl<T: Real> InputBatch<T> {
    pub fn with_capacity(spec: &ModelSpec, batch: usize) -> Self {
        InputBatch {
            batch: 0,
            branch: Vec::with_capacity(batch * spec.branch.input_width()),
            aux: Vec::new(),
            coords: Vec::with_capacity(batch * spec.coord_width()),
        }
    }

    /// Appends one query given standardized values.
    pub fn push(&mut self, spec: &ModelSpec, branch: &[f64], cv: f64, z: f64, t: f64) {
        self.batch += 1;
        self.branch.extend(branch.iter().map(|&v| T::of(v)));
        self.coords.push(T::of(z));
        self.coords.push(T::of(t));
        match spec.variant {
            Variant::M1 => self.branch.push(T::of(cv)),
            Variant::M2 => self.aux.push(T::of(cv)),
            Variant::M3 | Variant::M4 => self.coords.push(T::of(cv)),
        }
    }

    pub fn from_assembled(spec: &ModelSpec, rows: &[AssembledInputs]) -> Self {
        let mut out = InputBatch::with_capacity(spec, rows.len());
        for r in rows {
            out.batch += 1;
            out.branch.extend(r.branch.iter().map(|&v| T::of(v)));
            out.coords.extend(r.trunk.iter().map(|&v| T::of(v)));
            if let Some(a) = &r.aux {
                out.aux.extend(a.iter().map(|&v| T::of(v)));
            }
        }
        out
    }
}

/// `out[i] = Σ_k b[i,k]·t[i,k]`, the bias-free dot-product decoder.
pub fn decode<T: Real>(b: &[T], t: &[T], q: usize) -> Vec<T> {
    b.chunks_exact(q)
        .zip(t.chunks_exact(q))
        .map(|(bi, ti)| bi.iter().zip(ti).fold(T::zero(), |s, (x, y)| s + *x * *y))
        .collect()
}

/// Mean of squared differences; errors on an empty batch.
pub fn operator_loss<T: Real>(pred: &[T], target: &[T]) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::validation("loss of an empty batch"));
    }
    if pred.len() != target.len() {
        return Err(Error::Shape {
            what: "loss targets",
            expected: pred.len(),
            got: target.len(),
        });
    }
    let sum: f64 = pred.iter().zip(target).map(|(p, y)| (p.f64() - y.f64()).powi(2)).sum();
    Ok(sum / pred.len() as f64)
}

struct Caches<T> {
    branch: MlpCache<T>,
    aux: Option<MlpCache<T>>,
    merge: Option<MlpCache<T>>,
    trunk: MlpCache<T>,
}

/// Prediction, branch latent, trunk latent and caches.
type Forward<T> = (Vec<T>, Vec<T>, Vec<T>, Caches<T>);

/// Branch pathway, trunk and optional frozen embedding of one DeepONet.
#[derive(Debug, Clone)]
pub struct DeepOnet<T: Real> {
    spec: ModelSpec,
    branch: Mlp<T>,
    trunk: Mlp<T>,
    aux: Option<Mlp<T>>,
    merge: Option<Mlp<T>>,
    embedding: Option<FourierEmbedding<T>>,
}

impl<T: Real> DeepOnet<T> {
    /// Glorot-initialised sub-networks and a freshly drawn embedding; every
    /// component takes its own seed from a generator seeded with `seed`.
    pub fn new(spec: &ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut next = || rng.next_u64();
        let (sb, st, sa, sm, sf) = (next(), next(), next(), next(), next());
        let embedding = match spec.fourier {
            Some(f) => Some(FourierEmbedding::<f64>::new(f, 3, sf)?.cast()),
            None => None,
        };
        Ok(DeepOnet {
            spec: spec.clone(),
            branch: init_mlp(&spec.branch, sb)?,
            trunk: init_mlp(&spec.trunk, st)?,
            aux: spec.aux.as_ref().map(|s| init_mlp(s, sa)).transpose()?,
            merge: spec.merge.as_ref().map(|s| init_mlp(s, sm)).transpose()?,
            embedding,
        })
    }

    pub fn from_parts(
        spec: &ModelSpec,
        branch: Mlp<T>,
        trunk: Mlp<T>,
        aux: Option<Mlp<T>>,
        merge: Option<Mlp<T>>,
        embedding: Option<FourierEmbedding<T>>,
    ) -> Result<Self> {
        spec.validate()?;
        let same = |a: Option<&MlpSpec>, b: Option<&MlpSpec>| a == b;
        if branch.spec() != &spec.branch
            || trunk.spec() != &spec.trunk
            || !same(aux.as_ref().map(|n| n.spec()), spec.aux.as_ref())
            || !same(merge.as_ref().map(|n| n.spec()), spec.merge.as_ref())
        {
            return Err(Error::validation("sub-network shapes do not match the model spec"));
        }
        match (&embedding, spec.fourier) {
            (None, None) => {}
            (Some(e), Some(f)) if e.spec() == f && e.input_dim() == 3 => {}
            _ => return Err(Error::validation("Fourier embedding does not match the model spec")),
        }
        Ok(DeepOnet {
            spec: spec.clone(),
            branch,
            trunk,
            aux,
            merge,
            embedding,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn embedding(&self) -> Option<&FourierEmbedding<T>> {
        self.embedding.as_ref()
    }

    /// Sub-networks in storage order: branch, trunk, aux, merge.
    pub fn nets(&self) -> Vec<&Mlp<T>> {
        let mut v = vec![&self.branch, &self.trunk];
        v.extend(self.aux.as_ref());
        v.extend(self.merge.as_ref());
        v
    }

    pub fn nets_mut(&mut self) -> Vec<&mut Mlp<T>> {
        let mut v = vec![&mut self.branch, &mut self.trunk];
        v.extend(self.aux.as_mut());
        v.extend(self.merge.as_mut());
        v
    }

    pub fn cast<U: Real>(&self) -> DeepOnet<U> {
        DeepOnet {
            spec: self.spec.clone(),
            branch: self.branch.cast(),
            trunk: self.trunk.cast(),
            aux: self.aux.as_ref().map(Mlp::cast),
            merge: self.merge.as_ref().map(Mlp::cast),
            embedding: self.embedding.as_ref().map(FourierEmbedding::cast),
        }
    }

    /// Trainable parameters concatenated in storage order.
    pub fn flat_params(&self) -> Vec<T> {
        self.nets().iter().flat_map(|n| n.params().iter().copied()).collect()
    }

    pub fn flat_grads(&self) -> Vec<T> {
        self.nets().iter().flat_map(|n| n.grads().iter().copied()).collect()
    }

    pub fn set_flat_params(&mut self, flat: &[T]) -> Result<()> {
        let total = self.spec.param_count();
        if flat.len() != total {
            return Err(Error::Shape {
                what: "DeepONet parameter vector",
                expected: total,
                got: flat.len(),
            });
        }
        let mut off = 0;
        for net in self.nets_mut() {
            let p = net.params_mut();
            p.copy_from_slice(&flat[off..off + p.len()]);
            off += p.len();
        }
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        self.nets_mut().into_iter().for_each(Mlp::zero_grad);
    }

    fn check(&self, x: &InputBatch<T>) -> Result<()> {
        let n = x.batch;
        let checks = [
            ("branch input batch", n * self.spec.branch.input_width(), x.branch.len()),
            ("coordinate batch", n * self.spec.coord_width(), x.coords.len()),
            ("aux input batch", if self.aux.is_some() { n } else { 0 }, x.aux.len()),
        ];
        for (what, expected, got) in checks {
            if expected != got {
                return Err(Error::Shape { what, expected, got });
            }
        }
        Ok(())
    }

    /// Trunk network input: raw coordinates or their Fourier embedding.
    pub fn trunk_input(&self, x: &InputBatch<T>) -> Result<Vec<T>> {
        match &self.embedding {
            Some(e) => e.embed_batch(&x.coords, x.batch),
            None => Ok(x.coords.clone()),
        }
    }

    /// Branch-pathway and trunk latents, each `batch × q`.
    pub fn latents(&self, x: &InputBatch<T>) -> Result<(Vec<T>, Vec<T>)> {
        self.check(x)?;
        let b = self.branch_latent(x)?;
        let t = self.trunk.predict(&self.trunk_input(x)?, x.batch)?;
        Ok((b, t))
    }

    /// Branch pathway alone (including the M2 aux and merge nets).
    pub fn branch_latent(&self, x: &InputBatch<T>) -> Result<Vec<T>> {
        let n = x.batch;
        let b = self.branch.predict(&x.branch, n)?;
        match (&self.aux, &self.merge) {
            (Some(aux), Some(merge)) => {
                let a = aux.predict(&x.aux, n)?;
                merge.predict(&concat_rows(&b, &a, n, self.spec.q), n)
            }
            _ => Ok(b),
        }
    }

    /// Predictions in standardized target units.
    pub fn predict(&self, x: &InputBatch<T>) -> Result<Vec<T>> {
        let (b, t) = self.latents(x)?;
        Ok(decode(&b, &t, self.spec.q))
    }

    /// Trunk latent for a coordinate batch alone (no branch inputs needed).
    pub fn trunk_latent(&self, coords: &[T], batch: usize) -> Result<Vec<T>> {
        let x = InputBatch {
            batch,
            branch: Vec::new(),
            aux: Vec::new(),
            coords: coords.to_vec(),
        };
        if coords.len() != batch * self.spec.coord_width() {
            return Err(Error::Shape {
                what: "coordinate batch",
                expected: batch * self.spec.coord_width(),
                got: coords.len(),
            });
        }
        self.trunk.predict(&self.trunk_input(&x)?, batch)
    }

    /// Trunk latent on the tensor grid `depths × rest`, depth outermost.
    /// `rest` holds the remaining coordinates of each inner point.
    pub fn trunk_latent_grid(&self, depths: &[T], rest: &[T]) -> Result<Vec<T>> {
        let w = self.spec.coord_width() - 1;
        if !rest.len().is_multiple_of(w) {
            return Err(Error::Shape {
                what: "grid coordinates",
                expected: rest.len() / w * w,
                got: rest.len(),
            });
        }
        let (nz, nr) = (depths.len(), rest.len() / w);
        let input = match &self.embedding {
            Some(e) => e.embed_product(depths, nz, rest, nr, 1)?,
            None => depths.iter().flat_map(|&z| rest.chunks_exact(w).flat_map(move |r| std::iter::once(z).chain(r.iter().copied()))).collect(),
        };
        self.trunk.predict(&input, nz * nr)
    }

    fn forward(&self, x: &InputBatch<T>) -> Result<Forward<T>> {
        self.check(x)?;
        let n = x.batch;
        let q = self.spec.q;
        let branch = self.branch.forward(&x.branch, n)?;
        let trunk = self.trunk.forward(&self.trunk_input(x)?, n)?;
        let (b, aux, merge) = match (&self.aux, &self.merge) {
            (Some(aux_net), Some(merge_net)) => {
                let a = aux_net.forward(&x.aux, n)?;
                let mc = merge_net.forward(&concat_rows(branch.output(), a.output(), n, q), n)?;
                (mc.output().to_vec(), Some(a), Some(mc))
            }
            _ => (branch.output().to_vec(), None, None),
        };
        let t = trunk.output().to_vec();
        let pred = decode(&b, &t, q);
        Ok((
            pred,
            b,
            t,
            Caches {
                branch,
                aux,
                merge,
                trunk,
            },
        ))
    }

    /// MSE against `targets` and its gradient, accumulated into every
    /// sub-network's gradient buffer. Returns the loss.
    pub fn loss_and_grad(&mut self, x: &InputBatch<T>, targets: &[T]) -> Result<f64> {
        let (pred, b, t, caches) = self.forward(x)?;
        let loss = operator_loss(&pred, targets)?;
        let n = x.batch;
        let q = self.spec.q;
        let scale = T::of(2.0 / n as f64);
        let mut d_b = vec![T::zero(); n * q];
        let mut d_t = vec![T::zero(); n * q];
        for i in 0..n {
            let g = scale * (pred[i] - targets[i]);
            for k in 0..q {
                d_b[i * q + k] = g * t[i * q + k];
                d_t[i * q + k] = g * b[i * q + k];
            }
        }
        self.trunk.backward(&caches.trunk, &d_t)?;
        match (self.aux.as_mut(), self.merge.as_mut(), caches.aux, caches.merge) {
            (Some(aux), Some(merge), Some(ac), Some(mc)) => {
                let d_in = merge.backward(&mc, &d_b)?;
                let (d_main, d_aux) = split_rows(&d_in, n, q);
                self.branch.backward(&caches.branch, &d_main)?;
                aux.backward(&ac, &d_aux)?;
            }
            _ => {
                self.branch.backward(&caches.branch, &d_b)?;
            }
        }
        Ok(loss)
    }
}

fn concat_rows<T: Real>(a: &[T], b: &[T], n: usize, q: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(2 * n * q);
    for (ra, rb) in a.chunks_exact(q).zip(b.chunks_exact(q)) {
        out.extend_from_slice(ra);
        out.extend_from_slice(rb);
    }
    out
}

fn split_rows<T: Real>(x: &[T], _n: usize, q: usize) -> (Vec<T>, Vec<T>) {
    let mut a = Vec::with_capacity(x.len() / 2);
    let mut b = Vec::with_capacity(x.len() / 2);
    for row in x.chunks_exact(2 * q) {
        a.extend_from_slice(&row[..q]);
        b.extend_from_slice(&row[q..]);
    }
    (a, b)
}
