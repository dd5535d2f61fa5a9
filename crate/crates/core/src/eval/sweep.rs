use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{aggregate, GridSpec};
use crate::dataset::case_seeds;
use crate::deeponet::ModelState;
use crate::error::Result;
use crate::ode::IntegratorConfig;
use crate::random_fields::{CaseSampler, GrfSpec, ProfileKind, SamplingRanges};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub cases_per: usize,
    pub seed: u64,
    pub grid: GridSpec,
    pub reference: IntegratorConfig,
    /// Pressure ranges of the test cases; `cv_range` is ignored by both sweeps.
    pub ranges: SamplingRanges,
    /// Field variance and jitter; the length scale comes from the model or the sweep.
    pub grf: GrfSpec,
    pub kind: ProfileKind,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            cases_per: 10,
            seed: 0,
            grid: GridSpec::default(),
            reference: IntegratorConfig::default(),
            ranges: SamplingRanges::default(),
            grf: GrfSpec::paper_default(0.0),
            kind: ProfileKind::Grf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub n: usize,
    pub mean_mse_pa2: f64,
    pub std_mse_pa2: f64,
    pub mean_max_abs_pa: f64,
    pub in_distribution: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub param: String,
    pub model: String,
    pub training_cv_range: (f64, f64),
    pub training_length_scale: f64,
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},n,mean_mse_pa2,std_mse_pa2,mean_max_abs_pa,in_distribution\n", self.param);
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.value, r.n, r.mean_mse_pa2, r.std_mse_pa2, r.mean_max_abs_pa, r.in_distribution
            );
        }
        s
    }

    pub fn row(&self, value: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| (r.value - value).abs() < 1e-9)
    }
}

fn run(
    model: &ModelState,
    param: &str,
    values: &[f64],
    cfg: &SweepConfig,
    setup: impl Fn(f64) -> (SamplingRanges, GrfSpec, bool),
) -> Result<SweepTable> {
    let seeds = case_seeds(cfg.seed, cfg.cases_per);
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let (ranges, grf, in_distribution) = setup(value);
        let sampler = CaseSampler::new(ranges, &grf, model.spec().m_sensors)?;
        let cases: Vec<_> = seeds.iter().map(|&s| sampler.sample(cfg.kind, s)).collect();
        let (mean_mse_pa2, std_mse_pa2, mean_max_abs_pa) = if cases.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let r = aggregate(model, &cases, cfg.grid, &cfg.reference)?;
            (r.mean_mse_pa2, r.std_mse_pa2, r.mean_max_abs_pa)
        };
        rows.push(SweepRow {
            value,
            n: cases.len(),
            mean_mse_pa2,
            std_mse_pa2,
            mean_max_abs_pa,
            in_distribution,
        });
    }
    Ok(SweepTable {
        param: param.to_string(),
        model: model.spec().variant.label().to_string(),
        training_cv_range: model.training_data.cv_range,
        training_length_scale: model.training_data.length_scale,
        config: *cfg,
        rows,
    })
}

/// Mean grid MSE per `cv`, GRF fields at the training length scale. The
/// same case seeds are reused for every `cv`; the in/out-of-distribution
/// flag comes from the model's recorded training range.
pub fn sweep_cv(model: &ModelState, cv_values: &[f64], cfg: &SweepConfig) -> Result<SweepTable> {
    let l = model.training_data.length_scale;
    run(model, "cv", cv_values, cfg, |cv| {
        let ranges = SamplingRanges {
            cv_range: (cv, cv),
            ..cfg.ranges
        };
        (ranges, cfg.grf.with_length_scale(l), model.in_training_range(cv))
    })
}

/// Mean grid MSE per GRF length scale, `cv` drawn from the training range.
pub fn sweep_length_scale(model: &ModelState, values: &[f64], cfg: &SweepConfig) -> Result<SweepTable> {
    let train_l = model.training_data.length_scale;
    run(model, "length_scale", values, cfg, |l| {
        let ranges = SamplingRanges {
            cv_range: model.training_data.cv_range,
            ..cfg.ranges
        };
        (ranges, cfg.grf.with_length_scale(l), (l - train_l).abs() < 1e-12)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_dataset, DatasetConfig};
    use crate::deeponet::{init_model, ModelSpec, TrainConfig, Variant};
    use crate::nn::FourierSpec;

    fn model() -> ModelState {
        let ds = generate_dataset(&DatasetConfig {
            n: 4,
            m: 10,
            p: 5,
            nz: 20,
            nt: 20,
            seed: 1,
            ..Default::default()
        })
        .unwrap();
        let spec = ModelSpec::new(Variant::M3, 10, 4, 1, 6, FourierSpec::default()).unwrap();
        init_model(&spec, &ds, &TrainConfig::default()).unwrap()
    }

    fn cfg() -> SweepConfig {
        SweepConfig {
            cases_per: 2,
            grid: GridSpec { nz: 15, nt: 6 },
            ..Default::default()
        }
    }

    #[test]
    fn flags_and_reproducibility() {
        let m = model();
        let t = sweep_cv(&m, &[0.3, 0.6, 1.0], &cfg()).unwrap();
        assert!(t.rows.iter().all(|r| r.in_distribution));
        let t = sweep_cv(&m, &[0.1, 1.4], &cfg()).unwrap();
        assert!(t.rows.iter().all(|r| !r.in_distribution));
        assert_eq!(t, sweep_cv(&m, &[0.1, 1.4], &cfg()).unwrap());
        assert!(sweep_cv(&m, &[], &cfg()).unwrap().rows.is_empty());
        let l = sweep_length_scale(&m, &[0.2, 0.5], &cfg()).unwrap();
        assert!(!l.row(0.2).unwrap().in_distribution);
        assert!(l.row(0.5).unwrap().in_distribution);
        assert_eq!(l.to_csv().lines().count(), 3);
    }
}
