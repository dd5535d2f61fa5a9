use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{DeepOnet, ModelSpec};
use super::train::{EpochRecord, ModelState, TrainConfig, TrainingData};
use crate::dataset::StandardizationStats;
use crate::error::{Error, Result};
use crate::nn::{FourierEmbedding, Mlp, Real};
use crate::storage::{self, FileEntry};

pub const MODEL_MAGIC: &str = "terzaghi-deeponet/model";
pub const MODEL_SCHEMA_VERSION: u32 = 1;
const WEIGHTS: &str = "weights.bin";

/// One array inside `weights.bin`, in file order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub name: String,
    pub len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelManifest {
    magic: String,
    schema_version: u32,
    dtype: String,
    spec: ModelSpec,
    stats: StandardizationStats,
    training_data: TrainingData,
    config: TrainConfig,
    seed: u64,
    history: Vec<EpochRecord>,
    arrays: Vec<ArrayEntry>,
    files: Vec<FileEntry>,
}

const NET_NAMES: [&str; 4] = ["branch", "trunk", "aux", "merge"];

/// Writes `model.json` and `weights.bin` (f32le) into `dir`.
pub fn save_model(state: &ModelState, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let net = &state.net;
    let spec = net.spec();
    let present = [true, true, spec.aux.is_some(), spec.merge.is_some()];
    let names = NET_NAMES.iter().zip(present).filter(|(_, p)| *p).map(|(n, _)| *n);
    let mut arrays = Vec::new();
    let mut bytes = Vec::new();
    for (name, sub) in names.zip(net.nets()) {
        arrays.push(ArrayEntry {
            name: name.to_string(),
            len: sub.params().len(),
        });
        sub.params().iter().for_each(|v| v.write_le(&mut bytes));
    }
    if let Some(e) = net.embedding() {
        arrays.push(ArrayEntry {
            name: "fourier_b".to_string(),
            len: e.b_matrix().len(),
        });
        e.b_matrix().iter().for_each(|v| v.write_le(&mut bytes));
    }
    let entry = storage::write_blob(dir, WEIGHTS, &bytes)?;
    let manifest = ModelManifest {
        magic: MODEL_MAGIC.to_string(),
        schema_version: MODEL_SCHEMA_VERSION,
        dtype: f32::DTYPE.to_string(),
        spec: spec.clone(),
        stats: state.stats.clone(),
        training_data: state.training_data.clone(),
        config: state.config,
        seed: state.config.seed,
        history: state.history.clone(),
        arrays,
        files: vec![entry],
    };
    storage::write_json(&dir.join("model.json"), &manifest)
}

pub fn load_model(dir: &Path) -> Result<ModelState> {
    let path = dir.join("model.json");
    let man: ModelManifest = storage::read_manifest(&path, MODEL_MAGIC, MODEL_SCHEMA_VERSION)?;
    if man.dtype != f32::DTYPE {
        return Err(Error::format(&path, "dtype", format!("expected {:?}, found {:?}", f32::DTYPE, man.dtype)));
    }
    man.spec.validate()?;
    man.stats.validate()?;
    let total: usize = man.arrays.iter().map(|a| a.len).sum();
    let entry = storage::find_entry(&man.files, WEIGHTS, &path)?;
    let bytes = storage::read_blob(dir, entry, (total * f32::BYTES) as u64)?;
    let values: Vec<f32> = bytes.chunks_exact(f32::BYTES).map(f32::read_le).collect();

    let mut off = 0;
    let mut take = |name: &str, expected: usize| -> Result<Vec<f32>> {
        let a = man
            .arrays
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::format(&path, "arrays", format!("missing array {name}")))?;
        if a.len != expected {
            return Err(Error::format(&path, "arrays", format!("{name} has {} values, spec implies {expected}", a.len)));
        }
        let out = values[off..off + a.len].to_vec();
        off += a.len;
        Ok(out)
    };
    let spec = &man.spec;
    let branch = Mlp::from_params(spec.branch.clone(), take("branch", spec.branch.param_count())?)?;
    let trunk = Mlp::from_params(spec.trunk.clone(), take("trunk", spec.trunk.param_count())?)?;
    let aux = match &spec.aux {
        Some(s) => Some(Mlp::from_params(s.clone(), take("aux", s.param_count())?)?),
        None => None,
    };
    let merge = match &spec.merge {
        Some(s) => Some(Mlp::from_params(s.clone(), take("merge", s.param_count())?)?),
        None => None,
    };
    let embedding = match spec.fourier {
        Some(f) => Some(FourierEmbedding::from_matrix(f, 3, take("fourier_b", 3 * f.m_freq)?)?),
        None => None,
    };
    let net = DeepOnet::from_parts(spec, branch, trunk, aux, merge, embedding)?;
    Ok(ModelState {
        net,
        stats: man.stats,
        training_data: man.training_data,
        config: man.config,
        history: man.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_dataset, DatasetConfig};
    use crate::deeponet::{init_model, train, Variant};
    use crate::nn::FourierSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_preserves_predictions() {
        let ds = generate_dataset(&DatasetConfig {
            n: 5,
            m: 12,
            p: 10,
            nz: 30,
            nt: 30,
            seed: 1,
            ..Default::default()
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pts: Vec<(f64, f64)> = (0..100).map(|_| (rng.gen(), rng.gen_range(0.0..4.0))).collect();
        for v in Variant::ALL {
            let spec = ModelSpec::new(v, 12, 6, 2, 8, FourierSpec { m_freq: 5, sigma: 1.0 }).unwrap();
            let cfg = TrainConfig {
                epochs: 2,
                batch_size: 8,
                seed: 3,
                ..Default::default()
            };
            let st = train(&spec, &ds, None, &cfg).unwrap();
            let dir = tempfile::tempdir().unwrap();
            save_model(&st, dir.path()).unwrap();
            let back = load_model(dir.path()).unwrap();
            let case = ds.case(1);
            let a = st.predict_points(&case.u0, case.cv, &pts).unwrap();
            let b = back.predict_points(&case.u0, case.cv, &pts).unwrap();
            assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
            assert_eq!(back.history, st.history);
            assert_eq!(back.stats, st.stats);
            assert_eq!(back.net.flat_params(), st.net.flat_params());
        }
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let ds = generate_dataset(&DatasetConfig {
            n: 3,
            m: 8,
            p: 5,
            nz: 20,
            nt: 20,
            seed: 2,
            ..Default::default()
        })
        .unwrap();
        let spec = ModelSpec::new(Variant::M3, 8, 4, 1, 5, FourierSpec::default()).unwrap();
        let st = init_model(&spec, &ds, &TrainConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_model(&st, dir.path()).unwrap();
        let path = dir.path().join("model.json");
        let text = fs::read_to_string(&path).unwrap().replace("\"schema_version\": 1", "\"schema_version\": 99");
        fs::write(&path, text).unwrap();
        let err = load_model(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Format { ref field, .. } if field == "schema_version"), "{err}");
    }
}
