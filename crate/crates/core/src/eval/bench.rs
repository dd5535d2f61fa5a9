use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{mean_std, FieldModel, GridSpec};
use crate::consolidation::ConsolidationCase;
use crate::error::{Error, Result};

/// Smallest case count accepted for reported timing aggregates.
pub const MIN_BENCH_CASES: usize = 30;

/// A labelled field producer to time.
pub struct BenchTarget<'a> {
    pub label: String,
    pub model: &'a dyn FieldModel,
}

impl<'a> BenchTarget<'a> {
    pub fn new(model: &'a dyn FieldModel) -> Self {
        BenchTarget { label: model.label(), model }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub label: String,
    /// Wall-clock seconds per case.
    pub seconds: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub grid: GridSpec,
    pub n_cases: usize,
    pub records: Vec<TimingRecord>,
}

impl BenchReport {
    pub fn record(&self, label: &str) -> Option<&TimingRecord> {
        self.records.iter().find(|r| r.label == label)
    }

    /// `label,n,mean_s,std_s` per method.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("label,n,mean_s,std_s\n");
        for r in &self.records {
            let _ = writeln!(s, "{},{},{},{}", r.label, r.seconds.len(), r.mean, r.std);
        }
        s
    }
}

/// Times each target producing the full grid field for every case, one
/// method at a time with one untimed warm-up run first.
pub fn benchmark(targets: &[BenchTarget<'_>], cases: &[ConsolidationCase], grid: GridSpec) -> Result<BenchReport> {
    grid.validate()?;
    if cases.len() < MIN_BENCH_CASES {
        return Err(Error::validation(format!(
            "benchmarks need at least {MIN_BENCH_CASES} cases, got {}",
            cases.len()
        )));
    }
    let depths = grid.depths();
    let times: Vec<Vec<f64>> = cases.iter().map(|c| grid.times(c)).collect();
    let mut records = Vec::with_capacity(targets.len());
    for target in targets {
        target.model.predict_field(&cases[0], &depths, &times[0])?;
        let mut seconds = Vec::with_capacity(cases.len());
        for (case, t) in cases.iter().zip(&times) {
            let start = Instant::now();
            let field = target.model.predict_field(case, &depths, t)?;
            seconds.push(start.elapsed().as_secs_f64());
            std::hint::black_box(field);
        }
        let (mean, std) = mean_std(&seconds);
        records.push(TimingRecord {
            label: target.label.clone(),
            seconds,
            mean,
            std,
        });
    }
    Ok(BenchReport {
        grid,
        n_cases: cases.len(),
        records,
    })
}
