use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{DeepOnet, InputBatch, ModelSpec};
use crate::consolidation::ConsolidationCase;
use crate::dataset::{DatasetArrays, OperatorDataset, StandardizationStats};
use crate::error::{Error, Result};
use crate::nn::{adam_update, AdamConfig, AdamState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Mini-batch size in flattened `(case, point)` triples.
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Stop after this many epochs without validation improvement and keep
    /// the best parameters. Off when `None`.
    pub patience: Option<usize>,
    /// Learning rate reached at the last epoch by per-epoch exponential
    /// decay. Constant rate when `None`.
    #[serde(default)]
    pub lr_final: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 600,
            batch_size: 4096,
            adam: AdamConfig::default(),
            seed: 0,
            patience: None,
            lr_final: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::validation("batch size must be positive"));
        }
        if !(self.adam.lr > 0.0) || !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) {
            return Err(Error::validation("Adam needs lr > 0 and betas in [0, 1)"));
        }
        if let Some(f) = self.lr_final {
            if !(f > 0.0) || f > self.adam.lr {
                return Err(Error::validation("lr_final must be in (0, lr]"));
            }
        }
        if self.patience == Some(0) {
            return Err(Error::validation("patience must be at least 1"));
        }
        Ok(())
    }

    /// Learning rate used during `epoch` (1-based).
    pub fn lr_at(&self, epoch: usize) -> f64 {
        match self.lr_final {
            Some(f) if self.epochs > 1 => {
                let frac = (epoch.clamp(1, self.epochs) - 1) as f64 / (self.epochs - 1) as f64;
                self.adam.lr * (f / self.adam.lr).powf(frac)
            }
            _ => self.adam.lr,
        }
    }
}

/// Losses in standardized units. Epoch 0 is the initial evaluation; later
/// train losses are the mean over that epoch's mini-batches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

/// Provenance of the data a model was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingData {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub seed: u64,
    pub cv_range: (f64, f64),
    pub length_scale: f64,
}

/// A trained (or freshly initialised) surrogate with everything needed to
/// query it in physical units.
#[derive(Debug, Clone)]
pub struct ModelState {
    pub net: DeepOnet<f32>,
    pub stats: StandardizationStats,
    pub training_data: TrainingData,
    pub config: TrainConfig,
    pub history: Vec<EpochRecord>,
}

/// Standardized arrays batched by flattened triple index.
struct Batcher<'a> {
    spec: &'a ModelSpec,
    arrays: &'a DatasetArrays,
    m: usize,
    p: usize,
}

impl Batcher<'_> {
    fn batch(&self, idx: &[usize]) -> (InputBatch<f32>, Vec<f32>) {
        let mut x = InputBatch::with_capacity(self.spec, idx.len());
        let mut y = Vec::with_capacity(idx.len());
        let a = self.arrays;
        for &k in idx {
            let i = k / self.p;
            x.push(self.spec, &a.branch[i * self.m..(i + 1) * self.m], a.cv[i], a.coords[2 * k], a.coords[2 * k + 1]);
            y.push(a.targets[k] as f32);
        }
        (x, y)
    }

    /// Loss over every triple in chunks, parameters untouched.
    fn full_loss(&self, net: &DeepOnet<f32>, chunk: usize) -> Result<f64> {
        let total = self.arrays.targets.len();
        let idx: Vec<usize> = (0..total).collect();
        let mut sum = 0.0;
        for c in idx.chunks(chunk) {
            let (x, y) = self.batch(c);
            let pred = net.predict(&x)?;
            sum += pred.iter().zip(&y).map(|(p, t)| (*p as f64 - *t as f64).powi(2)).sum::<f64>();
        }
        Ok(sum / total as f64)
    }
}

fn training_data(ds: &OperatorDataset) -> TrainingData {
    let cfg = &ds.meta.config;
    TrainingData {
        n: ds.n,
        m: ds.m,
        p: ds.p,
        seed: cfg.seed,
        cv_range: cfg.ranges.cv_range,
        length_scale: cfg.grf.length_scale,
    }
}

/// Fresh model with training statistics taken from `train_set`.
pub fn init_model(spec: &ModelSpec, train_set: &OperatorDataset, cfg: &TrainConfig) -> Result<ModelState> {
    spec.validate()?;
    cfg.validate()?;
    let stats = train_set
        .stats
        .clone()
        .ok_or_else(|| Error::validation("training dataset carries no standardization statistics"))?;
    if train_set.m != spec.m_sensors {
        return Err(Error::Shape {
            what: "dataset sensor count",
            expected: spec.m_sensors,
            got: train_set.m,
        });
    }
    Ok(ModelState {
        net: DeepOnet::new(spec, cfg.seed)?,
        stats,
        training_data: training_data(train_set),
        config: *cfg,
        history: Vec::new(),
    })
}

/// Adam over shuffled mini-batches of flattened triples, standardized with
/// the training set's statistics. Deterministic per `cfg.seed`.
pub fn train(spec: &ModelSpec, train_set: &OperatorDataset, val_set: Option<&OperatorDataset>, cfg: &TrainConfig) -> Result<ModelState> {
    train_with_progress(spec, train_set, val_set, cfg, &mut |_| {})
}

pub fn train_with_progress(
    spec: &ModelSpec,
    train_set: &OperatorDataset,
    val_set: Option<&OperatorDataset>,
    cfg: &TrainConfig,
    progress: &mut dyn FnMut(&EpochRecord),
) -> Result<ModelState> {
    let mut state = init_model(spec, train_set, cfg)?;
    let std_train = train_set.standardized(&state.stats)?;
    let std_val = val_set.map(|v| v.standardized(&state.stats)).transpose()?;
    let tb = Batcher {
        spec,
        arrays: &std_train,
        m: train_set.m,
        p: train_set.p,
    };
    let vb = match (val_set, &std_val) {
        (Some(v), Some(a)) => Some(Batcher {
            spec,
            arrays: a,
            m: v.m,
            p: v.p,
        }),
        _ => None,
    };
    let eval_chunk = cfg.batch_size.max(1024);
    let val_loss = |net: &DeepOnet<f32>| vb.as_ref().map(|b| b.full_loss(net, eval_chunk)).transpose();

    let net = &mut state.net;
    let initial = EpochRecord {
        epoch: 0,
        train_loss: tb.full_loss(net, eval_chunk)?,
        val_loss: val_loss(net)?,
    };
    progress(&initial);
    state.history.push(initial);

    let mut adam: Vec<AdamState<f32>> = net.nets().iter().map(|n| AdamState::new(n.params().len())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train_set.triples()).collect();
    let mut best: Option<(f64, Vec<f32>)> = None;
    let mut since_best = 0;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let adam_cfg = AdamConfig {
            lr: cfg.lr_at(epoch),
            ..cfg.adam
        };
        let mut sum = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let (x, y) = tb.batch(idx);
            net.zero_grad();
            let loss = net.loss_and_grad(&x, &y)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            sum += loss * idx.len() as f64;
            for (sub, st) in net.nets_mut().into_iter().zip(adam.iter_mut()) {
                let (p, g) = sub.params_and_grads();
                adam_update(p, g, st, &adam_cfg)?;
            }
        }
        let record = EpochRecord {
            epoch,
            train_loss: sum / order.len() as f64,
            val_loss: val_loss(net)?,
        };
        progress(&record);
        state.history.push(record);

        if let (Some(patience), Some(v)) = (cfg.patience, record.val_loss) {
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, net.flat_params()));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= patience {
                    break;
                }
            }
        }
    }
    if let Some((_, params)) = best {
        net.set_flat_params(&params)?;
    }
    Ok(state)
}

impl ModelState {
    pub fn spec(&self) -> &ModelSpec {
        self.net.spec()
    }

    pub fn in_training_range(&self, cv: f64) -> bool {
        let (lo, hi) = self.training_data.cv_range;
        (lo..=hi).contains(&cv)
    }

    fn check_case(&self, u0: &[f64]) -> Result<()> {
        if u0.len() != self.spec().m_sensors {
            return Err(Error::Shape {
                what: "sensor values",
                expected: self.spec().m_sensors,
                got: u0.len(),
            });
        }
        Ok(())
    }

    /// Predictions in Pa at physical `(z, t)` points.
    pub fn predict_points(&self, u0: &[f64], cv: f64, points: &[(f64, f64)]) -> Result<Vec<f64>> {
        self.check_case(u0)?;
        let s = &self.stats;
        let b = s.branch(u0);
        let spec = self.spec();
        let mut x = InputBatch::with_capacity(spec, points.len());
        for &(z, t) in points {
            x.push(spec, &b, s.cv(cv), s.z(z), s.t(t));
        }
        Ok(self.net.predict(&x)?.into_iter().map(|v| s.target_pa(v as f64)).collect())
    }

    /// Full `depths × times` field in Pa, row-major by depth. The branch
    /// pathway runs once and the trunk once per grid point.
    pub fn predict_field(&self, case: &ConsolidationCase, depths: &[f64], times: &[f64]) -> Result<Vec<f64>> {
        self.check_case(&case.u0)?;
        let s = &self.stats;
        let spec = self.spec();
        let cv = s.cv(case.cv);
        let mut one = InputBatch::with_capacity(spec, 1);
        one.push(spec, &s.branch(&case.u0), cv, 0.0, 0.0);
        let b = self.net.branch_latent(&one)?;

        let with_cv = spec.coord_width() == 3;
        let zs: Vec<f32> = depths.iter().map(|&z| s.z(z) as f32).collect();
        let mut rest = Vec::with_capacity(times.len() * 2);
        for &t in times {
            rest.push(s.t(t) as f32);
            if with_cv {
                rest.push(cv as f32);
            }
        }
        let t = self.net.trunk_latent_grid(&zs, &rest)?;
        Ok(t.chunks_exact(spec.q)
            .map(|row| {
                let v: f32 = row.iter().zip(&b).map(|(x, y)| x * y).sum();
                s.target_pa(v as f64)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_dataset, DatasetConfig};
    use crate::deeponet::Variant;
    use crate::nn::FourierSpec;

    fn data(n: usize, seed: u64) -> OperatorDataset {
        generate_dataset(&DatasetConfig {
            n,
            m: 10,
            p: 20,
            nz: 30,
            nt: 40,
            seed,
            ..Default::default()
        })
        .unwrap()
    }

    fn small_spec(v: Variant) -> ModelSpec {
        ModelSpec::new(v, 10, 8, 2, 12, FourierSpec { m_freq: 8, sigma: 1.0 }).unwrap()
    }

    #[test]
    fn zero_epochs_keeps_initialisation() {
        let ds = data(8, 1);
        let spec = small_spec(Variant::M3);
        let cfg = TrainConfig {
            epochs: 0,
            seed: 4,
            ..Default::default()
        };
        let st = train(&spec, &ds, None, &cfg).unwrap();
        assert_eq!(st.net.flat_params(), DeepOnet::<f32>::new(&spec, 4).unwrap().flat_params());
        assert_eq!(st.history.len(), 1);
    }

    #[test]
    fn training_is_deterministic_and_descends() {
        let ds = data(16, 2);
        let val = DatasetConfig {
            n: 4,
            m: 10,
            p: 20,
            nz: 30,
            nt: 40,
            seed: 99,
            compute_stats: false,
            ..Default::default()
        };
        let val = generate_dataset(&val).unwrap();
        let cfg = TrainConfig {
            epochs: 15,
            batch_size: 32,
            seed: 5,
            ..Default::default()
        };
        for v in Variant::ALL {
            let a = train(&small_spec(v), &ds, Some(&val), &cfg).unwrap();
            let b = train(&small_spec(v), &ds, Some(&val), &cfg).unwrap();
            assert_eq!(a.history, b.history);
            assert_eq!(a.history.len(), 16);
            assert!(a.history.iter().all(|r| r.val_loss.is_some()));
            assert!(a.history.last().unwrap().train_loss < a.history[0].train_loss, "{v}");
        }
    }

    #[test]
    fn embedding_is_frozen() {
        let ds = data(6, 3);
        let spec = small_spec(Variant::M4);
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 16,
            seed: 1,
            ..Default::default()
        };
        let st = train(&spec, &ds, None, &cfg).unwrap();
        let fresh = DeepOnet::<f32>::new(&spec, 1).unwrap();
        assert_eq!(st.net.embedding().unwrap().b_matrix(), fresh.embedding().unwrap().b_matrix());
        assert_ne!(st.net.flat_params(), fresh.flat_params());
    }

    #[test]
    fn field_prediction_matches_pointwise() {
        let ds = data(6, 4);
        for v in Variant::ALL {
            let st = init_model(&small_spec(v), &ds, &TrainConfig::default()).unwrap();
            let case = ds.case(2);
            let depths = [0.0, 0.4, 1.0];
            let times = [0.0, 0.7, 3.0];
            let field = st.predict_field(&case, &depths, &times).unwrap();
            let pts: Vec<(f64, f64)> = depths.iter().flat_map(|&z| times.iter().map(move |&t| (z, t))).collect();
            let pointwise = st.predict_points(&case.u0, case.cv, &pts).unwrap();
            for (a, b) in field.iter().zip(&pointwise) {
                assert!((a - b).abs() <= 1e-4 * b.abs().max(1.0), "{v}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn needs_training_statistics() {
        let mut ds = data(4, 5);
        ds.stats = None;
        assert!(train(&small_spec(Variant::M1), &ds, None, &TrainConfig::default()).is_err());
    }

    #[test]
    fn lr_schedule_endpoints() {
        let cfg = TrainConfig {
            epochs: 5,
            lr_final: Some(1e-5),
            ..Default::default()
        };
        assert_eq!(cfg.lr_at(1), 1e-3);
        assert!((cfg.lr_at(5) - 1e-5).abs() < 1e-18);
        assert!((cfg.lr_at(3) - 1e-4).abs() < 1e-15);
        assert_eq!(TrainConfig::default().lr_at(7), 1e-3);
        assert!(TrainConfig { lr_final: Some(1.0), ..Default::default() }.validate().is_err());
    }

    #[test]
    fn early_stopping_keeps_best() {
        let ds = data(8, 6);
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 16,
            seed: 2,
            patience: Some(2),
            lr_final: None,
            adam: AdamConfig {
                lr: 0.05,
                ..Default::default()
            },
        };
        let st = train(&small_spec(Variant::M3), &ds, Some(&ds), &cfg).unwrap();
        let best = st.history[1..].iter().filter_map(|r| r.val_loss).fold(f64::INFINITY, f64::min);
        let now = Batcher {
            spec: st.spec(),
            arrays: &ds.standardized(&st.stats).unwrap(),
            m: ds.m,
            p: ds.p,
        }
        .full_loss(&st.net, 1024)
        .unwrap();
        assert!((now - best).abs() <= 1e-9 * best.max(1e-12));
    }
}
