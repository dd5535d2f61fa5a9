//! Times BDF, RK45 and a DeepONet producing full 100×100 fields.

use terzaghi_deeponet::dataset::{generate_dataset, sample_cases, DatasetConfig};
use terzaghi_deeponet::deeponet::{train, ModelSpec, TrainConfig, Variant};
use terzaghi_deeponet::eval::{benchmark, BenchReport, BenchTarget, GridSpec, SolverModel};
use terzaghi_deeponet::nn::FourierSpec;
use terzaghi_deeponet::ode::{IntegratorConfig, Method};
use terzaghi_deeponet::Result;

pub fn run(n_cases: usize, grid: GridSpec, seed: u64) -> Result<BenchReport> {
    let data = generate_dataset(&DatasetConfig {
        n: 20,
        p: 20,
        seed,
        ..Default::default()
    })?;
    let spec = ModelSpec::new(Variant::M3, data.m, 50, 6, 30, FourierSpec::default())?;
    let model = train(
        &spec,
        &data,
        None,
        &TrainConfig {
            epochs: 2,
            seed,
            ..Default::default()
        },
    )?;
    let bdf = SolverModel {
        config: IntegratorConfig::default(),
    };
    let rk45 = SolverModel {
        config: IntegratorConfig::with_method(Method::Rk45),
    };
    let cases = sample_cases(&DatasetConfig {
        n: n_cases,
        seed: seed + 1,
        ..Default::default()
    })?;
    benchmark(&[BenchTarget::new(&bdf), BenchTarget::new(&rk45), BenchTarget::new(&model)], &cases, grid)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let r = run(100, GridSpec::default(), 1)?;
    print!("{}", r.to_csv());
    let rk = r.record("RK45").map_or(f64::NAN, |t| t.mean);
    for t in &r.records {
        println!("{:<5} {:>9.3} ms  ({:.1}× vs RK45)", t.label, 1e3 * t.mean, rk / t.mean);
    }
    Ok(())
}
