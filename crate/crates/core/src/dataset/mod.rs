//! Operator-learning datasets: `N` input functions, each with `P` random
//! evaluation points and solver targets.
//!
//! Evaluation points are drawn uniformly over `(z, tv) ∈ [0,1] × [0,2]` and
//! stored as physical `(z, t)`. Targets come from bilinear interpolation of
//! one BDF solve per case on an `nz × nt` grid.

mod stats;

use std::fs;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use stats::StandardizationStats;

use crate::consolidation::{linspace, ConsolidationCase, SolutionField};
use crate::error::{Error, Result};
use crate::ode::{bdf_solve, IntegratorConfig};
use crate::random_fields::{CaseSampler, GrfSpec, ProfileKind, SamplingRanges, GENERATOR_NAME};
use crate::storage::{self, FileEntry};

pub const DATASET_MAGIC: &str = "terzaghi-deeponet/dataset";
pub const DATASET_SCHEMA_VERSION: u32 = 1;
/// Upper end of the sampled time-factor range.
pub const TV_MAX: f64 = 2.0;

const FILES: [&str; 4] = ["branch_inputs.bin", "cv.bin", "eval_points.bin", "targets.bin"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub ranges: SamplingRanges,
    /// Variance, length scale and jitter of the GRF profiles; the mean is drawn per case.
    pub grf: GrfSpec,
    /// Fraction of GRF (vs. uniform) initial profiles.
    pub mix: f64,
    pub solver: IntegratorConfig,
    pub nz: usize,
    pub nt: usize,
    pub seed: u64,
    /// Compute standardization statistics from this dataset (training sets).
    pub compute_stats: bool,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            n: 40_000,
            m: 100,
            p: 100,
            ranges: SamplingRanges::default(),
            grf: GrfSpec::paper_default(0.0),
            mix: 0.5,
            solver: IntegratorConfig::default(),
            nz: 100,
            nt: 200,
            seed: 0,
            compute_stats: true,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m < 2 || self.p == 0 {
            return Err(Error::validation(format!(
                "need n >= 1, m >= 2, p >= 1 (got n = {}, m = {}, p = {})",
                self.n, self.m, self.p
            )));
        }
        if !(0.0..=1.0).contains(&self.mix) {
            return Err(Error::validation(format!("mix must lie in [0, 1], got {}", self.mix)));
        }
        if self.nz < 3 || self.nt < 2 {
            return Err(Error::validation("solver grid needs nz >= 3 and nt >= 2"));
        }
        self.ranges.validate()?;
        self.grf.validate()?;
        self.solver.validate()
    }
}

/// Provenance of a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationMeta {
    pub generator: String,
    pub config: DatasetConfig,
    pub grf_cases: usize,
    pub uniform_cases: usize,
}

/// Flat row-major arrays of a dataset (raw Pa / years, or standardized).
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetArrays {
    /// `n × m` sensor values.
    pub branch: Vec<f64>,
    /// `n`.
    pub cv: Vec<f64>,
    /// `n × p × 2`, `(z, t)` per point.
    pub coords: Vec<f64>,
    /// `n × p`.
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorDataset {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub arrays: DatasetArrays,
    pub stats: Option<StandardizationStats>,
    pub meta: GenerationMeta,
}

/// Per-case seed sequence: draws from a master generator seeded with `seed`.
pub fn case_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| master.next_u64()).collect()
}

/// Generator for the profile kind and evaluation points of a case; stream 1
/// of the case seed, so stream 0 reproduces the case itself.
fn point_rng(case_seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
    rng.set_stream(1);
    rng
}

/// `tv` grid on `[0, 2]`, quadratically refined towards `tv = 0`, mapped to
/// physical times for `case`.
pub fn reference_times(case: &ConsolidationCase, nt: usize) -> (Vec<f64>, Vec<f64>) {
    let tv: Vec<f64> = linspace(0.0, 1.0, nt).iter().map(|s| TV_MAX * s * s).collect();
    let t = tv.iter().map(|&v| case.time_for(v)).collect();
    (tv, t)
}

/// Solves `case` on the dataset's reference grid.
pub fn reference_field(case: &ConsolidationCase, nz: usize, nt: usize, solver: &IntegratorConfig) -> Result<SolutionField> {
    let (tv, t) = reference_times(case, nt);
    let mut field = bdf_solve(case, nz, &t, solver)?;
    // Exact grid factors, free of t → tv round-off.
    field.tv_times = tv;
    Ok(field)
}

/// Profile kind, case, and the generator positioned for point draws.
fn draw_case(sampler: &CaseSampler, mix: f64, case_seed: u64) -> (ProfileKind, ConsolidationCase, ChaCha8Rng) {
    let mut rng = point_rng(case_seed);
    let kind = if rng.gen::<f64>() < mix {
        ProfileKind::Grf
    } else {
        ProfileKind::Uniform
    };
    (kind, sampler.sample(kind, case_seed), rng)
}

/// The `cfg.n` cases `generate_dataset(cfg)` would solve, without solving.
pub fn sample_cases(cfg: &DatasetConfig) -> Result<Vec<ConsolidationCase>> {
    cfg.validate()?;
    let sampler = CaseSampler::new(cfg.ranges, &cfg.grf, cfg.m)?;
    Ok(case_seeds(cfg.seed, cfg.n)
        .into_iter()
        .map(|s| draw_case(&sampler, cfg.mix, s).1)
        .collect())
}

pub fn generate_dataset(cfg: &DatasetConfig) -> Result<OperatorDataset> {
    cfg.validate()?;
    let sampler = CaseSampler::new(cfg.ranges, &cfg.grf, cfg.m)?;
    let (n, m, p) = (cfg.n, cfg.m, cfg.p);
    let mut arrays = DatasetArrays {
        branch: Vec::with_capacity(n * m),
        cv: Vec::with_capacity(n),
        coords: Vec::with_capacity(n * p * 2),
        targets: Vec::with_capacity(n * p),
    };
    let mut grf_cases = 0;
    for case_seed in case_seeds(cfg.seed, n) {
        let (kind, case, mut rng) = draw_case(&sampler, cfg.mix, case_seed);
        grf_cases += (kind == ProfileKind::Grf) as usize;
        let field = reference_field(&case, cfg.nz, cfg.nt, &cfg.solver).map_err(|e| Error::CaseSolve {
            seed: case_seed,
            source: Box::new(e),
        })?;
        arrays.branch.extend_from_slice(&case.u0);
        arrays.cv.push(case.cv);
        for _ in 0..p {
            let z: f64 = rng.gen();
            let tv = TV_MAX * rng.gen::<f64>();
            arrays.coords.push(z);
            arrays.coords.push(case.time_for(tv));
            arrays.targets.push(field.interpolate(z, tv));
        }
    }
    let stats = if cfg.compute_stats {
        Some(StandardizationStats::from_arrays(&arrays, n, m, p)?)
    } else {
        None
    };
    Ok(OperatorDataset {
        n,
        m,
        p,
        arrays,
        stats,
        meta: GenerationMeta {
            generator: GENERATOR_NAME.to_string(),
            config: cfg.clone(),
            grf_cases,
            uniform_cases: n - grf_cases,
        },
    })
}

impl OperatorDataset {
    /// Reconstructs case `i` from its stored sensor values and `cv`.
    pub fn case(&self, i: usize) -> ConsolidationCase {
        let u0 = self.arrays.branch[i * self.m..(i + 1) * self.m].to_vec();
        ConsolidationCase::new(self.arrays.cv[i], u0).expect("stored cases are valid")
    }

    /// `(z, t)` of point `j` of case `i`.
    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        let k = 2 * (i * self.p + j);
        (self.arrays.coords[k], self.arrays.coords[k + 1])
    }

    pub fn target(&self, i: usize, j: usize) -> f64 {
        self.arrays.targets[i * self.p + j]
    }

    pub fn triples(&self) -> usize {
        self.n * self.p
    }

    /// Standardized copy of the arrays under `stats` (usually the training set's).
    pub fn standardized(&self, stats: &StandardizationStats) -> Result<DatasetArrays> {
        if stats.m() != self.m {
            return Err(Error::Shape {
                what: "standardization statistics",
                expected: self.m,
                got: stats.m(),
            });
        }
        Ok(stats.standardize(&self.arrays))
    }

    /// Checks shapes and the domain of every evaluation point.
    pub fn validate(&self) -> Result<()> {
        let a = &self.arrays;
        let shapes = [
            ("branch_inputs", self.n * self.m, a.branch.len()),
            ("cv", self.n, a.cv.len()),
            ("eval_points", self.n * self.p * 2, a.coords.len()),
            ("targets", self.n * self.p, a.targets.len()),
        ];
        for (what, expected, got) in shapes {
            if expected != got {
                return Err(Error::validation(format!("{what}: expected {expected} values, got {got}")));
            }
        }
        if a.targets.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite target"));
        }
        for i in 0..self.n {
            let cv = a.cv[i];
            for j in 0..self.p {
                let (z, t) = self.point(i, j);
                let tv = cv * t;
                if !(0.0..=1.0).contains(&z) || !(0.0..=TV_MAX * (1.0 + 1e-12)).contains(&tv) {
                    return Err(Error::validation(format!("point ({z}, {t}) of case {i} is outside the domain")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Counts {
    n: usize,
    m: usize,
    p: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GeneratorInfo {
    name: String,
    seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DatasetManifest {
    magic: String,
    schema_version: u32,
    counts: Counts,
    dtype: String,
    generator: GeneratorInfo,
    solver: IntegratorConfig,
    ranges: SamplingRanges,
    meta: GenerationMeta,
    stats: Option<StandardizationStats>,
    files: Vec<FileEntry>,
}

/// Writes the dataset directory with full-precision `f64le` arrays.
pub fn save_dataset(ds: &OperatorDataset, dir: &Path) -> Result<()> {
    save_dataset_as(ds, dir, "f64le")
}

/// Writes the dataset with the given array dtype (`"f64le"` or `"f32le"`).
pub fn save_dataset_as(ds: &OperatorDataset, dir: &Path, dtype: &str) -> Result<()> {
    ds.validate()?;
    fs::create_dir_all(dir)?;
    let a = &ds.arrays;
    let arrays: [&[f64]; 4] = [&a.branch, &a.cv, &a.coords, &a.targets];
    let mut files = Vec::with_capacity(4);
    for (name, values) in FILES.iter().zip(arrays) {
        files.push(storage::write_blob(dir, name, &storage::encode_f64(values, dtype)?)?);
    }
    let manifest = DatasetManifest {
        magic: DATASET_MAGIC.to_string(),
        schema_version: DATASET_SCHEMA_VERSION,
        counts: Counts {
            n: ds.n,
            m: ds.m,
            p: ds.p,
        },
        dtype: dtype.to_string(),
        generator: GeneratorInfo {
            name: ds.meta.generator.clone(),
            seed: ds.meta.config.seed,
        },
        solver: ds.meta.config.solver,
        ranges: ds.meta.config.ranges,
        meta: ds.meta.clone(),
        stats: ds.stats.clone(),
        files,
    };
    storage::write_json(&dir.join("manifest.json"), &manifest)
}

pub fn load_dataset(dir: &Path) -> Result<OperatorDataset> {
    let manifest_path = dir.join("manifest.json");
    let man: DatasetManifest = storage::read_manifest(&manifest_path, DATASET_MAGIC, DATASET_SCHEMA_VERSION)?;
    let width = storage::dtype_width(&man.dtype)
        .ok_or_else(|| Error::format(&manifest_path, "dtype", format!("unsupported dtype {:?}", man.dtype)))?;
    let Counts { n, m, p } = man.counts;
    let lens = [n * m, n, n * p * 2, n * p];
    let mut arrays = Vec::with_capacity(4);
    for (name, len) in FILES.iter().zip(lens) {
        let entry = storage::find_entry(&man.files, name, &manifest_path)?;
        let bytes = storage::read_blob(dir, entry, (len * width) as u64)?;
        arrays.push(storage::decode_f64(&bytes, &man.dtype));
    }
    let targets = arrays.pop().unwrap();
    let coords = arrays.pop().unwrap();
    let cv = arrays.pop().unwrap();
    let branch = arrays.pop().unwrap();
    if let Some(stats) = &man.stats {
        stats.validate()?;
    }
    Ok(OperatorDataset {
        n,
        m,
        p,
        arrays: DatasetArrays {
            branch,
            cv,
            coords,
            targets,
        },
        stats: man.stats,
        meta: man.meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> DatasetConfig {
        DatasetConfig {
            n: 6,
            m: 20,
            p: 10,
            nz: 40,
            nt: 60,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn triple_count() {
        let cfg = DatasetConfig {
            n: 40_000,
            m: 100,
            p: 100,
            ..Default::default()
        };
        assert_eq!(cfg.n * cfg.p, 4_000_000);
        let ds = generate_dataset(&small(1)).unwrap();
        assert_eq!(ds.triples(), 60);
        ds.validate().unwrap();
    }

    #[test]
    fn pinned_boundary_point_is_zero() {
        let cfg = DatasetConfig {
            n: 1,
            p: 1,
            ranges: SamplingRanges {
                u0_uniform_range: (10e3, 10e3),
                mean_range: (10e3, 10e3),
                cv_range: (0.5, 0.5),
            },
            mix: 0.0,
            compute_stats: false,
            ..small(3)
        };
        let ds = generate_dataset(&cfg).unwrap();
        let field = reference_field(&ds.case(0), cfg.nz, cfg.nt, &cfg.solver).unwrap();
        let (_, t) = ds.point(0, 0);
        assert_eq!(field.interpolate(0.0, 0.5 * t), 0.0);
        assert!(ds.stats.is_none());
    }

    #[test]
    fn degenerate_dataset_rejects_stats() {
        let cfg = DatasetConfig {
            n: 1,
            ranges: SamplingRanges {
                u0_uniform_range: (10e3, 10e3),
                mean_range: (10e3, 10e3),
                cv_range: (0.5, 0.5),
            },
            ..small(3)
        };
        assert!(matches!(generate_dataset(&cfg), Err(Error::ZeroStd(_))));
    }

    #[test]
    fn deterministic_generation() {
        assert_eq!(generate_dataset(&small(9)).unwrap(), generate_dataset(&small(9)).unwrap());
        assert_ne!(generate_dataset(&small(9)).unwrap().arrays, generate_dataset(&small(10)).unwrap().arrays);
    }

    #[test]
    fn standardization_round_trip() {
        let ds = generate_dataset(&small(4)).unwrap();
        let stats = ds.stats.clone().unwrap();
        let std = ds.standardized(&stats).unwrap();
        let back = stats.destandardize(&std);
        for (a, b) in back.targets.iter().zip(&ds.arrays.targets) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        for (a, b) in back.coords.iter().zip(&ds.arrays.coords) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        let mean = std.targets.iter().sum::<f64>() / std.targets.len() as f64;
        let var = std.targets.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / std.targets.len() as f64;
        assert!(mean.abs() < 1e-6 && (var.sqrt() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dataset_files_round_trip() {
        let ds = generate_dataset(&small(5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back, ds);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.arrays.targets), bits(&ds.arrays.targets));
    }
}
