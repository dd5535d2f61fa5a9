//! `terzaghi` command-line interface.
//!
//! Every flag can also be given in a JSON config file passed with
//! `--config`: top-level keys apply to all subcommands, and a section named
//! after the subcommand (`"gen-data"`, `"train"`, ...) overrides them. Flags
//! on the command line win over the file.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::consolidation::{analytical_solution, ConsolidationCase, SERIES_MAX_TERMS, SERIES_TOL};
use crate::dataset::{generate_dataset, load_dataset, sample_cases, save_dataset_as, DatasetConfig};
use crate::deeponet::{load_model, save_model, train_with_progress, ModelSpec, ModelState, TrainConfig, Variant};
use crate::error::{Error, Result};
use crate::eval::{aggregate, benchmark, sweep_cv, sweep_length_scale, write_report, BenchTarget, FieldModel, GridSpec, SolverModel, SweepConfig};
use crate::nn::{AdamConfig, FourierSpec};
use crate::ode::{solve_case, IntegratorConfig, Method};
use crate::random_fields::{sample_case, GrfSpec, ProfileKind, SamplingRanges};

#[derive(Debug, Parser)]
#[command(name = "terzaghi", version, about = "1-D consolidation solvers and DeepONet surrogates")]
pub struct Cli {
    /// JSON file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an operator-learning dataset directory.
    GenData(GenDataArgs),
    /// Train one DeepONet variant.
    Train(TrainArgs),
    /// Evaluate a model on the dense grid against the reference solver.
    Eval(EvalArgs),
    /// Time models and solvers producing full grid fields.
    Bench(BenchArgs),
    /// Out-of-distribution sweep over cv or the GRF length scale.
    Sweep(SweepArgs),
    /// Solve one case and write the field as CSV.
    Solve(SolveArgs),
}

macro_rules! merge_fields {
    ($a:expr, $b:expr; $($f:ident),* $(,)?) => {
        $( if $a.$f.is_none() { $a.$f = $b.$f.take(); } )*
    };
}

/// Solver tolerance flags shared by several subcommands.
#[derive(Debug, Default)]
pub struct SolverArgs {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub bdf: Option<String>,
}

impl SolverArgs {
    fn config(&self, method: Option<Method>) -> Result<IntegratorConfig> {
        let bdf = match self.bdf.as_deref() {
            None | Some("bdf2") | Some("BDF2") => Method::Bdf2,
            Some("bdf1") | Some("BDF1") => Method::Bdf1,
            Some(other) => return Err(Error::validation(format!("unknown BDF order {other:?}"))),
        };
        let d = IntegratorConfig::default();
        let cfg = IntegratorConfig {
            method: method.unwrap_or(bdf),
            rtol: self.rtol.unwrap_or(d.rtol),
            atol: self.atol.unwrap_or(d.atol),
            ..d
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct GenDataArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Fraction of GRF (vs. uniform) initial profiles.
    #[arg(long)]
    pub mix: Option<f64>,
    /// LO:HI in m²/yr.
    #[arg(long)]
    pub cv_range: Option<String>,
    /// LO:HI in Pa, for uniform profiles and GRF means.
    #[arg(long)]
    pub u0_range: Option<String>,
    /// GRF variance in Pa².
    #[arg(long)]
    pub grf_sigma2: Option<f64>,
    #[arg(long)]
    pub grf_length: Option<f64>,
    /// Solver grid nodes.
    #[arg(long)]
    pub nz: Option<usize>,
    /// Solver time slices over tv in [0, 2].
    #[arg(long)]
    pub nt: Option<usize>,
    /// f64le (default) or f32le.
    #[arg(long)]
    pub dtype: Option<String>,
    /// Validation/test set: skip standardization statistics.
    #[arg(long)]
    pub eval_set: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative tolerance of the adaptive solver.
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Absolute tolerance in Pa.
    #[arg(long)]
    pub atol: Option<f64>,
    /// BDF order for reference solves: bdf1 or bdf2.
    #[arg(long)]
    pub bdf: Option<String>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct TrainArgs {
    /// Variant 1-4.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Final learning rate of an exponential per-epoch decay.
    #[arg(long)]
    pub lr_final: Option<f64>,
    #[arg(long)]
    pub q: Option<usize>,
    /// Hidden layers per sub-network.
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub ffe_m: Option<usize>,
    #[arg(long)]
    pub ffe_sigma: Option<f64>,
    /// Early-stopping patience in epochs (off by default).
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct EvalArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Dataset directory whose cases are evaluated.
    #[arg(long)]
    pub cases: Option<PathBuf>,
    /// Evaluate K freshly sampled cases instead.
    #[arg(long)]
    pub n_fresh: Option<usize>,
    #[arg(long)]
    pub mix: Option<f64>,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative tolerance of the adaptive solver.
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Absolute tolerance in Pa.
    #[arg(long)]
    pub atol: Option<f64>,
    /// BDF order for reference solves: bdf1 or bdf2.
    #[arg(long)]
    pub bdf: Option<String>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct BenchArgs {
    /// Comma-separated model directories.
    #[arg(long)]
    pub models: Option<String>,
    /// Comma-separated solvers: bdf, rk45.
    #[arg(long)]
    pub solvers: Option<String>,
    #[arg(long)]
    pub cases: Option<usize>,
    /// Sensors per case when no model is given.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative tolerance of the adaptive solver.
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Absolute tolerance in Pa.
    #[arg(long)]
    pub atol: Option<f64>,
    /// BDF order for reference solves: bdf1 or bdf2.
    #[arg(long)]
    pub bdf: Option<String>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SweepArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// cv or length-scale.
    #[arg(long)]
    pub param: Option<String>,
    /// LO:HI, combined with --steps.
    #[arg(long)]
    pub range: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Explicit comma-separated values (overrides --range).
    #[arg(long)]
    pub values: Option<String>,
    #[arg(long)]
    pub cases_per: Option<usize>,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative tolerance of the adaptive solver.
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Absolute tolerance in Pa.
    #[arg(long)]
    pub atol: Option<f64>,
    /// BDF order for reference solves: bdf1 or bdf2.
    #[arg(long)]
    pub bdf: Option<String>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SolveArgs {
    #[arg(long)]
    pub cv: Option<f64>,
    /// uniform:PA or grf.
    #[arg(long)]
    pub profile: Option<String>,
    /// bdf, bdf1, rk45, rk4 or analytic.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub grid: Option<String>,
    /// Sensors for the GRF profile.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub grf_mean: Option<f64>,
    #[arg(long)]
    pub grf_sigma2: Option<f64>,
    #[arg(long)]
    pub grf_length: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative tolerance of the adaptive solver.
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Absolute tolerance in Pa.
    #[arg(long)]
    pub atol: Option<f64>,
    /// BDF order for reference solves: bdf1 or bdf2.
    #[arg(long)]
    pub bdf: Option<String>,
}

impl GenDataArgs {
    fn merge(&mut self, mut o: Self) {
        merge_fields!(self, o; n, m, p, mix, rtol, atol, bdf, cv_range, u0_range, grf_sigma2, grf_length, nz, nt, dtype, eval_set, out, seed);
    }
}

impl TrainArgs {
    fn merge(&mut self, mut o: Self) {
        merge_fields!(self, o; model, data, val, epochs, batch, lr, lr_final, q, depth, width, ffe_m, ffe_sigma, patience, out, seed);
    }
}

impl EvalArgs {
    fn merge(&mut self, mut o: Self) {
        merge_fields!(self, o; rtol, atol, bdf, model, cases, n_fresh, mix, grid, report, seed);
    }
}

impl BenchArgs {
    fn merge(&mut self, mut o: Self) {
        merge_fields!(self, o; rtol, atol, bdf, models, solvers, cases, m, grid, report, seed);
    }
}

impl SweepArgs {
    fn merge(&mut self, mut o: Self) {
        merge_fields!(self, o; rtol, atol, bdf, model, param, range, steps, values, cases_per, grid, report, seed);
    }
}

impl SolveArgs {
    fn merge(&mut self, mut o: Self) {
        merge_fields!(self, o; rtol, atol, bdf, cv, profile, method, grid, m, grf_mean, grf_sigma2, grf_length, out, seed);
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Section of the config file for `name`, with top-level keys as fallback.
fn config_section<T: DeserializeOwned + Default>(path: Option<&Path>, name: &str, sections: &[&str]) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path)?;
    let root: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::validation(format!("config {}: {e}", path.display())))?;
    let obj = root
        .as_object()
        .ok_or_else(|| Error::validation(format!("config {} must hold a JSON object", path.display())))?;
    let mut merged = serde_json::Map::new();
    // Top-level keys apply only where the subcommand knows them.
    for (k, v) in obj {
        if !sections.contains(&k.as_str()) && is_known::<T>(k) {
            merged.insert(k.clone(), v.clone());
        }
    }
    if let Some(section) = obj.get(name) {
        let section = section
            .as_object()
            .ok_or_else(|| Error::validation(format!("config section {name:?} must be an object")))?;
        for (k, v) in section {
            merged.insert(k.clone(), v.clone());
        }
    }
    serde_json::from_value(serde_json::Value::Object(merged)).map_err(|e| Error::validation(format!("config {} [{name}]: {e}", path.display())))
}

/// Whether `T` accepts `key`.
fn is_known<T: DeserializeOwned>(key: &str) -> bool {
    let mut m = serde_json::Map::new();
    m.insert(key.to_string(), serde_json::Value::Null);
    serde_json::from_value::<T>(serde_json::Value::Object(m)).is_ok()
}

fn solver_args(rtol: &Option<f64>, atol: &Option<f64>, bdf: &Option<String>) -> SolverArgs {
    SolverArgs {
        rtol: *rtol,
        atol: *atol,
        bdf: bdf.clone(),
    }
}

const SECTIONS: [&str; 6] = ["gen-data", "train", "eval", "bench", "sweep", "solve"];

fn execute(cli: Cli) -> Result<()> {
    let cfg = cli.config.as_deref();
    match cli.command {
        Command::GenData(mut a) => {
            a.merge(config_section(cfg, "gen-data", &SECTIONS)?);
            gen_data(a)
        }
        Command::Train(mut a) => {
            a.merge(config_section(cfg, "train", &SECTIONS)?);
            train_cmd(a)
        }
        Command::Eval(mut a) => {
            a.merge(config_section(cfg, "eval", &SECTIONS)?);
            eval_cmd(a)
        }
        Command::Bench(mut a) => {
            a.merge(config_section(cfg, "bench", &SECTIONS)?);
            bench_cmd(a)
        }
        Command::Sweep(mut a) => {
            a.merge(config_section(cfg, "sweep", &SECTIONS)?);
            sweep_cmd(a)
        }
        Command::Solve(mut a) => {
            a.merge(config_section(cfg, "solve", &SECTIONS)?);
            solve_cmd(a)
        }
    }
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::validation(format!("missing required --{flag}")))
}

/// Parses `LO:HI`.
pub fn parse_range(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::validation(format!("range must look like LO:HI, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = a.trim().parse().map_err(|_| bad())?;
    let hi: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(lo <= hi) {
        return Err(Error::validation(format!("range {s:?} has LO > HI")));
    }
    Ok((lo, hi))
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| Error::validation(format!("not a number: {p:?}"))))
        .collect()
}

fn grid_of(s: Option<&str>) -> Result<GridSpec> {
    s.map(GridSpec::parse).unwrap_or(Ok(GridSpec::default()))
}

fn gen_data(a: GenDataArgs) -> Result<()> {
    let d = DatasetConfig::default();
    let dr = SamplingRanges::default();
    let u0_range = a.u0_range.as_deref().map(parse_range).transpose()?.unwrap_or(dr.u0_uniform_range);
    let ranges = SamplingRanges {
        u0_uniform_range: u0_range,
        mean_range: u0_range,
        cv_range: a.cv_range.as_deref().map(parse_range).transpose()?.unwrap_or(dr.cv_range),
    };
    let grf = GrfSpec::new(0.0, a.grf_sigma2.unwrap_or(d.grf.variance), a.grf_length.unwrap_or(d.grf.length_scale));
    let cfg = DatasetConfig {
        n: a.n.unwrap_or(d.n),
        m: a.m.unwrap_or(d.m),
        p: a.p.unwrap_or(d.p),
        ranges,
        grf,
        mix: a.mix.unwrap_or(d.mix),
        solver: solver_args(&a.rtol, &a.atol, &a.bdf).config(None)?,
        nz: a.nz.unwrap_or(d.nz),
        nt: a.nt.unwrap_or(d.nt),
        seed: a.seed.unwrap_or(d.seed),
        compute_stats: !a.eval_set.unwrap_or(false),
    };
    let out = required(a.out, "out")?;
    let dtype = a.dtype.unwrap_or_else(|| "f64le".into());
    let ds = generate_dataset(&cfg)?;
    save_dataset_as(&ds, &out, &dtype)?;
    eprintln!(
        "wrote {} cases × {} points ({} GRF, {} uniform) to {}",
        ds.n,
        ds.p,
        ds.meta.grf_cases,
        ds.meta.uniform_cases,
        out.display()
    );
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let variant = Variant::parse(&required(a.model, "model")?)?;
    let data = load_dataset(&required(a.data, "data")?)?;
    let val = a.val.as_deref().map(load_dataset).transpose()?;
    let fourier = FourierSpec {
        m_freq: a.ffe_m.unwrap_or(50),
        sigma: a.ffe_sigma.unwrap_or(1.0),
    };
    let spec = ModelSpec::new(variant, data.m, a.q.unwrap_or(50), a.depth.unwrap_or(6), a.width.unwrap_or(30), fourier)?;
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        epochs: a.epochs.unwrap_or(d.epochs),
        batch_size: a.batch.unwrap_or(d.batch_size),
        adam: AdamConfig {
            lr: a.lr.unwrap_or(d.adam.lr),
            ..d.adam
        },
        seed: a.seed.unwrap_or(d.seed),
        patience: a.patience,
        lr_final: a.lr_final,
    };
    let out = required(a.out, "out")?;
    let every = (cfg.epochs / 20).max(1);
    let state = train_with_progress(&spec, &data, val.as_ref(), &cfg, &mut |r| {
        if r.epoch % every == 0 || r.epoch == cfg.epochs {
            match r.val_loss {
                Some(v) => eprintln!("epoch {:>5}  train {:.4e}  val {:.4e}", r.epoch, r.train_loss, v),
                None => eprintln!("epoch {:>5}  train {:.4e}", r.epoch, r.train_loss),
            }
        }
    })?;
    save_model(&state, &out)?;
    eprintln!("saved {} to {}", variant, out.display());
    Ok(())
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let model = load_model(&required(a.model, "model")?)?;
    let grid = grid_of(a.grid.as_deref())?;
    let reference = solver_args(&a.rtol, &a.atol, &a.bdf).config(None)?;
    let cases: Vec<ConsolidationCase> = match (a.cases, a.n_fresh) {
        (Some(dir), _) => {
            let ds = load_dataset(&dir)?;
            (0..ds.n).map(|i| ds.case(i)).collect()
        }
        (None, Some(k)) => sample_cases(&DatasetConfig {
            n: k,
            m: model.spec().m_sensors,
            mix: a.mix.unwrap_or(0.5),
            seed: a.seed.unwrap_or(0),
            ..Default::default()
        })?,
        (None, None) => return Err(Error::validation("eval needs --cases DIR or --n-fresh K")),
    };
    let report = aggregate(&model, &cases, grid, &reference)?;
    println!(
        "{}: {} cases, MSE {:.4e} ± {:.4e} Pa², worst case {}",
        report.model,
        report.cases.len(),
        report.mean_mse_pa2,
        report.std_mse_pa2,
        report.worst_index().unwrap_or(0)
    );
    if let Some(path) = a.report {
        write_report(&path, &report, &report.to_csv())?;
    }
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> Result<()> {
    let grid = grid_of(a.grid.as_deref())?;
    let models: Vec<ModelState> = a
        .models
        .as_deref()
        .unwrap_or("")
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| load_model(Path::new(s.trim())))
        .collect::<Result<_>>()?;
    let mut solvers = Vec::new();
    for s in a.solvers.as_deref().unwrap_or("bdf,rk45").split(',').filter(|s| !s.trim().is_empty()) {
        let method = match s.trim().to_ascii_lowercase().as_str() {
            "bdf" => None,
            "rk45" => Some(Method::Rk45),
            other => return Err(Error::validation(format!("unknown solver {other:?}"))),
        };
        solvers.push(SolverModel {
            config: solver_args(&a.rtol, &a.atol, &a.bdf).config(method)?,
        });
    }
    let m = models.first().map(|s| s.spec().m_sensors).unwrap_or(a.m.unwrap_or(100));
    let cases = sample_cases(&DatasetConfig {
        n: a.cases.unwrap_or(500),
        m,
        seed: a.seed.unwrap_or(0),
        ..Default::default()
    })?;
    let mut targets: Vec<BenchTarget> = solvers.iter().map(|s| BenchTarget::new(s as &dyn FieldModel)).collect();
    targets.extend(models.iter().map(|s| BenchTarget::new(s as &dyn FieldModel)));
    let report = benchmark(&targets, &cases, grid)?;
    for r in &report.records {
        println!("{:<6} mean {:.6} s  std {:.6} s  ({} cases)", r.label, r.mean, r.std, r.seconds.len());
    }
    if let Some(path) = a.report {
        write_report(&path, &report, &report.to_csv())?;
    }
    Ok(())
}

fn sweep_cmd(a: SweepArgs) -> Result<()> {
    let model = load_model(&required(a.model, "model")?)?;
    let cfg = SweepConfig {
        cases_per: a.cases_per.unwrap_or(10),
        seed: a.seed.unwrap_or(0),
        grid: grid_of(a.grid.as_deref())?,
        reference: solver_args(&a.rtol, &a.atol, &a.bdf).config(None)?,
        ..Default::default()
    };
    let param = a.param.as_deref().unwrap_or("cv").to_ascii_lowercase();
    let explicit = a.values.as_deref().map(parse_list).transpose()?;
    let table = match param.as_str() {
        "cv" => {
            let values = match explicit {
                Some(v) => v,
                None => {
                    let (lo, hi) = parse_range(a.range.as_deref().unwrap_or("0.1:1.5"))?;
                    crate::consolidation::linspace(lo, hi, a.steps.unwrap_or(15).max(1))
                }
            };
            sweep_cv(&model, &values, &cfg)?
        }
        "length-scale" | "length_scale" | "l" => {
            let values = match explicit {
                Some(v) => v,
                None => match a.range.as_deref() {
                    Some(r) => {
                        let (lo, hi) = parse_range(r)?;
                        crate::consolidation::linspace(lo, hi, a.steps.unwrap_or(7).max(1))
                    }
                    None => vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
                },
            };
            sweep_length_scale(&model, &values, &cfg)?
        }
        other => return Err(Error::validation(format!("unknown sweep parameter {other:?}"))),
    };
    print!("{}", table.to_csv());
    if let Some(path) = a.report {
        write_report(&path, &table, &table.to_csv())?;
    }
    Ok(())
}

/// Builds the CSV text of a solved field: header `z,t,tv,u_pa`, rows over z then t.
pub fn field_csv(depths: &[f64], times: &[f64], tv: &[f64], values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 40 + 16);
    s.push_str("z,t,tv,u_pa\n");
    for (iz, z) in depths.iter().enumerate() {
        for (it, (t, v)) in times.iter().zip(tv).enumerate() {
            let _ = writeln!(s, "{z},{t},{v},{}", values[iz * times.len() + it]);
        }
    }
    s
}

fn solve_cmd(a: SolveArgs) -> Result<()> {
    let cv = required(a.cv, "cv")?;
    let grid = grid_of(a.grid.as_deref())?;
    let m = a.m.unwrap_or(100);
    let profile = a.profile.unwrap_or_else(|| "uniform:15e3".into());
    let (case, uniform_u0) = if let Some(v) = profile.strip_prefix("uniform:") {
        let u0: f64 = v.trim().parse().map_err(|_| Error::validation(format!("bad uniform pressure {v:?}")))?;
        (ConsolidationCase::uniform(cv, u0, m)?, Some(u0))
    } else if profile == "grf" {
        let mean = a.grf_mean.unwrap_or(15e3);
        let d = GrfSpec::paper_default(0.0);
        let grf = GrfSpec::new(0.0, a.grf_sigma2.unwrap_or(d.variance), a.grf_length.unwrap_or(d.length_scale));
        let ranges = SamplingRanges {
            cv_range: (cv, cv),
            mean_range: (mean, mean),
            ..Default::default()
        };
        (sample_case(&ranges, ProfileKind::Grf, &grf, m, a.seed.unwrap_or(0))?, None)
    } else {
        return Err(Error::validation(format!("profile must be uniform:PA or grf, got {profile:?}")));
    };
    let depths = grid.depths();
    let tv = grid.time_factors();
    let times = grid.times(&case);
    let method = a.method.as_deref().unwrap_or("bdf").to_ascii_lowercase();
    let values = match method.as_str() {
        "analytic" => {
            let u0 = uniform_u0.ok_or_else(|| Error::validation("the analytic solution needs a uniform profile"))?;
            let mut v = Vec::with_capacity(grid.points());
            for &z in &depths {
                for &t in &tv {
                    v.push(analytical_solution(z, t, u0, SERIES_TOL, SERIES_MAX_TERMS)?);
                }
            }
            v
        }
        "bdf" | "bdf2" => solve_case(&case, grid.nz, &times, &solver_args(&a.rtol, &a.atol, &a.bdf).config(Some(Method::Bdf2))?)?.values,
        "bdf1" => solve_case(&case, grid.nz, &times, &solver_args(&a.rtol, &a.atol, &a.bdf).config(Some(Method::Bdf1))?)?.values,
        "rk45" => solve_case(&case, grid.nz, &times, &solver_args(&a.rtol, &a.atol, &a.bdf).config(Some(Method::Rk45))?)?.values,
        "rk4" => solve_case(&case, grid.nz, &times, &solver_args(&a.rtol, &a.atol, &a.bdf).config(Some(Method::Rk4Fixed))?)?.values,
        other => return Err(Error::validation(format!("unknown method {other:?}"))),
    };
    let csv = field_csv(&depths, &times, &tv, &values);
    match a.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(&path, csv)?;
            eprintln!("wrote {} rows to {}", grid.points(), path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_and_list_parsing() {
        assert_eq!(parse_range("0.3:1.0").unwrap(), (0.3, 1.0));
        assert_eq!(parse_range("10e3:20e3").unwrap(), (1e4, 2e4));
        assert!(parse_range("2:1").is_err());
        assert!(parse_range("abc").is_err());
        assert_eq!(parse_list("0.2, 0.5,0.8").unwrap(), vec![0.2, 0.5, 0.8]);
        assert!(parse_list("0.2,x").is_err());
    }

    #[test]
    fn csv_layout() {
        let csv = field_csv(&[0.0, 1.0], &[0.0, 2.0], &[0.0, 1.0], &[1.0, 2.0, 3.0, 4.0]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "z,t,tv,u_pa");
        assert_eq!(lines[1], "0,0,0,1");
        assert_eq!(lines[2], "0,2,1,2");
        assert_eq!(lines[3], "1,0,0,3");
    }

    #[test]
    fn config_sections_merge() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"seed": 7, "grid": "20x10", "solve": {"cv": 0.8, "method": "rk45"}}"#).unwrap();
        let s: SolveArgs = config_section(Some(&path), "solve", &SECTIONS).unwrap();
        assert_eq!((s.cv, s.seed, s.method.as_deref(), s.grid.as_deref()), (Some(0.8), Some(7), Some("rk45"), Some("20x10")));
        let t: TrainArgs = config_section(Some(&path), "train", &SECTIONS).unwrap();
        assert_eq!(t.seed, Some(7));
        fs::write(&path, r#"{"solve": {"cv": 0.8, "bogus": 1}}"#).unwrap();
        assert!(config_section::<SolveArgs>(Some(&path), "solve", &SECTIONS).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["terzaghi", "solve"]), 2);
        assert_eq!(run(["terzaghi", "frobnicate"]), 2);
        assert_eq!(run(["terzaghi", "eval", "--model", "/nonexistent/dir", "--n-fresh", "1"]), 4);
    }
}
