//! Grid evaluation of surrogates against the reference solver, aggregate
//! reports, out-of-distribution sweeps and wall-clock benchmarks.

mod bench;
mod sweep;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use bench::{benchmark, BenchReport, BenchTarget, TimingRecord, MIN_BENCH_CASES};
pub use sweep::{sweep_cv, sweep_length_scale, SweepConfig, SweepRow, SweepTable};

use crate::consolidation::{linspace, ConsolidationCase};
use crate::dataset::{OperatorDataset, TV_MAX};
use crate::deeponet::ModelState;
use crate::error::{Error, Result};
use crate::ode::{solve_case, IntegratorConfig};

/// Uniform evaluation grid: `nz` depths on `[0, 1]`, `nt` time factors on `[0, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nz: usize,
    pub nt: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { nz: 100, nt: 100 }
    }
}

impl GridSpec {
    /// Parses `"100x100"`.
    pub fn parse(s: &str) -> Result<GridSpec> {
        let bad = || Error::validation(format!("grid must look like NZxNT, got {s:?}"));
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let g = GridSpec {
            nz: a.trim().parse().map_err(|_| bad())?,
            nt: b.trim().parse().map_err(|_| bad())?,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nz < 3 || self.nt < 2 {
            return Err(Error::validation(format!("grid needs nz >= 3 and nt >= 2, got {}x{}", self.nz, self.nt)));
        }
        Ok(())
    }

    pub fn points(&self) -> usize {
        self.nz * self.nt
    }

    pub fn depths(&self) -> Vec<f64> {
        linspace(0.0, 1.0, self.nz)
    }

    pub fn time_factors(&self) -> Vec<f64> {
        linspace(0.0, TV_MAX, self.nt)
    }

    pub fn times(&self, case: &ConsolidationCase) -> Vec<f64> {
        self.time_factors().iter().map(|&tv| case.time_for(tv)).collect()
    }
}

impl std::fmt::Display for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.nz, self.nt)
    }
}

/// Anything that produces a full pore-pressure field for a case.
pub trait FieldModel {
    fn label(&self) -> String;

    /// Field in Pa, `depths × times`, row-major by depth.
    fn predict_field(&self, case: &ConsolidationCase, depths: &[f64], times: &[f64]) -> Result<Vec<f64>>;

    /// `(mean, std)` of the target standardization, if the model has one.
    fn target_scaling(&self) -> Option<(f64, f64)> {
        None
    }
}

impl FieldModel for ModelState {
    fn label(&self) -> String {
        self.spec().variant.label().to_string()
    }

    fn predict_field(&self, case: &ConsolidationCase, depths: &[f64], times: &[f64]) -> Result<Vec<f64>> {
        ModelState::predict_field(self, case, depths, times)
    }

    fn target_scaling(&self) -> Option<(f64, f64)> {
        Some((self.stats.target_mean, self.stats.target_std))
    }
}

/// A numerical solver used as a field model, solving on the query depths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverModel {
    pub config: IntegratorConfig,
}

impl FieldModel for SolverModel {
    fn label(&self) -> String {
        self.config.method.label().to_string()
    }

    fn predict_field(&self, case: &ConsolidationCase, depths: &[f64], times: &[f64]) -> Result<Vec<f64>> {
        let uniform = linspace(0.0, 1.0, depths.len());
        if depths.iter().zip(&uniform).any(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(Error::validation("solver models need uniformly spaced depths on [0, 1]"));
        }
        Ok(solve_case(case, depths.len(), times, &self.config)?.values)
    }
}

/// One case on the evaluation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEvaluation {
    pub depths: Vec<f64>,
    pub tv: Vec<f64>,
    pub times: Vec<f64>,
    pub predicted: Vec<f64>,
    pub truth: Vec<f64>,
    pub mse_pa2: f64,
    /// MSE of standardized residuals, when the model has a target scaling.
    pub mse_std: Option<f64>,
    pub max_abs_pa: f64,
}

/// Queries `model` on every grid point and compares with a reference solve.
pub fn evaluate_on_grid(model: &dyn FieldModel, case: &ConsolidationCase, grid: GridSpec, reference: &IntegratorConfig) -> Result<GridEvaluation> {
    grid.validate()?;
    let depths = grid.depths();
    let tv = grid.time_factors();
    let times = grid.times(case);
    let truth = solve_case(case, grid.nz, &times, reference)?.values;
    let predicted = model.predict_field(case, &depths, &times)?;
    if predicted.len() != truth.len() {
        return Err(Error::Shape {
            what: "predicted field",
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    let n = truth.len() as f64;
    let mse_pa2 = predicted.iter().zip(&truth).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / n;
    let max_abs_pa = predicted.iter().zip(&truth).map(|(p, y)| (p - y).abs()).fold(0.0, f64::max);
    let mse_std = model.target_scaling().map(|(mu, sd)| {
        predicted
            .iter()
            .zip(&truth)
            .map(|(p, y)| ((p - mu) / sd - (y - mu) / sd).powi(2))
            .sum::<f64>()
            / n
    });
    Ok(GridEvaluation {
        depths,
        tv,
        times,
        predicted,
        truth,
        mse_pa2,
        mse_std,
        max_abs_pa,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub index: usize,
    pub cv: f64,
    pub mse_pa2: f64,
    pub mse_std: Option<f64>,
    pub max_abs_pa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub index: usize,
    pub cv: f64,
    pub u0: Vec<f64>,
    pub field: GridEvaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub grid: GridSpec,
    pub reference: IntegratorConfig,
    pub cases: Vec<CaseRecord>,
    /// Population mean / std over `cases`.
    pub mean_mse_pa2: f64,
    pub std_mse_pa2: f64,
    pub mean_mse_std: Option<f64>,
    pub std_mse_std: Option<f64>,
    pub mean_max_abs_pa: f64,
    pub worst: Option<WorstCase>,
}

/// Population mean and standard deviation; `(NaN, NaN)` for no values.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Index of the largest value (first on ties).
pub fn argmax(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
}

impl EvalReport {
    /// Summary statistics over per-case records, without a worst-case dump.
    pub fn from_records(model: String, grid: GridSpec, reference: IntegratorConfig, cases: Vec<CaseRecord>) -> Self {
        let mse: Vec<f64> = cases.iter().map(|c| c.mse_pa2).collect();
        let (mean_mse_pa2, std_mse_pa2) = mean_std(&mse);
        let std_vals: Option<Vec<f64>> = cases.iter().map(|c| c.mse_std).collect();
        let (mean_mse_std, std_mse_std) = match std_vals {
            Some(v) if !v.is_empty() => {
                let (m, s) = mean_std(&v);
                (Some(m), Some(s))
            }
            _ => (None, None),
        };
        let max_abs: Vec<f64> = cases.iter().map(|c| c.max_abs_pa).collect();
        EvalReport {
            model,
            grid,
            reference,
            mean_max_abs_pa: mean_std(&max_abs).0,
            cases,
            mean_mse_pa2,
            std_mse_pa2,
            mean_mse_std,
            std_mse_std,
            worst: None,
        }
    }

    pub fn worst_index(&self) -> Option<usize> {
        argmax(&self.cases.iter().map(|c| c.mse_pa2).collect::<Vec<_>>())
    }

    /// Per-case rows: `index,cv,mse_pa2,mse_std,max_abs_pa`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,cv,mse_pa2,mse_std,max_abs_pa\n");
        for c in &self.cases {
            let std = c.mse_std.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{},{}", c.index, c.cv, c.mse_pa2, std, c.max_abs_pa);
        }
        s
    }
}

/// Evaluates every case on the grid and extracts the highest-MSE case.
pub fn aggregate(model: &dyn FieldModel, cases: &[ConsolidationCase], grid: GridSpec, reference: &IntegratorConfig) -> Result<EvalReport> {
    if cases.is_empty() {
        return Err(Error::validation("evaluation needs at least one case"));
    }
    let mut records = Vec::with_capacity(cases.len());
    let mut worst: Option<(usize, GridEvaluation)> = None;
    for (index, case) in cases.iter().enumerate() {
        let ev = evaluate_on_grid(model, case, grid, reference)?;
        records.push(CaseRecord {
            index,
            cv: case.cv,
            mse_pa2: ev.mse_pa2,
            mse_std: ev.mse_std,
            max_abs_pa: ev.max_abs_pa,
        });
        if worst.as_ref().is_none_or(|(_, w)| ev.mse_pa2 > w.mse_pa2) {
            worst = Some((index, ev));
        }
    }
    let mut report = EvalReport::from_records(model.label(), grid, *reference, records);
    report.worst = worst.map(|(index, field)| WorstCase {
        index,
        cv: cases[index].cv,
        u0: cases[index].u0.clone(),
        field,
    });
    Ok(report)
}

/// Point-wise MSE of a model on a held-out dataset's stored targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetScore {
    pub mse_pa2: f64,
    pub mse_std: f64,
}

pub fn dataset_mse(model: &ModelState, ds: &OperatorDataset) -> Result<DatasetScore> {
    if ds.n == 0 || ds.p == 0 {
        return Err(Error::validation("dataset has no targets"));
    }
    if ds.m != model.spec().m_sensors {
        return Err(Error::Shape {
            what: "dataset sensors",
            expected: model.spec().m_sensors,
            got: ds.m,
        });
    }
    let mut sum = 0.0;
    for i in 0..ds.n {
        let case = ds.case(i);
        let points: Vec<(f64, f64)> = (0..ds.p).map(|j| ds.point(i, j)).collect();
        let pred = model.predict_points(&case.u0, case.cv, &points)?;
        sum += pred.iter().enumerate().map(|(j, &v)| (v - ds.target(i, j)).powi(2)).sum::<f64>();
    }
    let mse_pa2 = sum / ds.triples() as f64;
    Ok(DatasetScore {
        mse_pa2,
        mse_std: mse_pa2 / model.stats.target_std.powi(2),
    })
}

/// Writes `value` as pretty JSON and `csv` next to it with a `.csv` extension.
pub fn write_report<T: Serialize>(path: &Path, value: &T, csv: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    std::fs::write(path.with_extension("csv"), csv)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = GridSpec::parse("100x100").unwrap();
        assert_eq!(g.points(), 10_000);
        assert_eq!(GridSpec::parse("20X7").unwrap(), GridSpec { nz: 20, nt: 7 });
        assert!(GridSpec::parse("100").is_err());
        assert!(GridSpec::parse("1x5").is_err());
        assert_eq!(g.to_string(), "100x100");
    }

    #[test]
    fn solver_against_itself_is_exact() {
        let case = ConsolidationCase::uniform(0.5, 15e3, 20).unwrap();
        let cfg = IntegratorConfig::default();
        let ev = evaluate_on_grid(&SolverModel { config: cfg }, &case, GridSpec { nz: 30, nt: 12 }, &cfg).unwrap();
        assert_eq!(ev.mse_pa2, 0.0);
        assert_eq!(ev.max_abs_pa, 0.0);
        assert_eq!(ev.truth.len(), 360);
        assert!(ev.mse_std.is_none());
    }

    #[test]
    fn closed_form_aggregates() {
        let rec = |index, mse| CaseRecord {
            index,
            cv: 0.5,
            mse_pa2: mse,
            mse_std: Some(mse / 4.0),
            max_abs_pa: 1.0,
        };
        let cfg = IntegratorConfig::default();
        let r = EvalReport::from_records("x".into(), GridSpec::default(), cfg, vec![rec(0, 3.0)]);
        assert_eq!((r.mean_mse_pa2, r.std_mse_pa2, r.worst_index()), (3.0, 0.0, Some(0)));
        let r = EvalReport::from_records("x".into(), GridSpec::default(), cfg, vec![rec(0, 3.0), rec(1, 8.0)]);
        assert_eq!(r.mean_mse_pa2, 5.5);
        assert_eq!(r.std_mse_pa2, 2.5);
        assert_eq!(r.mean_mse_std, Some(5.5 / 4.0));
        assert_eq!(r.worst_index(), Some(1));
        assert!(r.to_csv().lines().count() == 3);
    }

    #[test]
    fn single_case_report() {
        let case = ConsolidationCase::uniform(0.7, 12e3, 10).unwrap();
        let cfg = IntegratorConfig::default();
        let r = aggregate(&SolverModel { config: cfg }, &[case], GridSpec { nz: 11, nt: 5 }, &cfg).unwrap();
        assert_eq!(r.std_mse_pa2, 0.0);
        assert_eq!(r.worst.as_ref().unwrap().index, 0);
        assert!(aggregate(&SolverModel { config: cfg }, &[], GridSpec::default(), &cfg).is_err());
    }
}
