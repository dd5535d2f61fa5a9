//! Sweeps a trained model over consolidation coefficients and GRF length
//! scales outside its training distribution.

use terzaghi_deeponet::dataset::{generate_dataset, DatasetConfig};
use terzaghi_deeponet::deeponet::{train, ModelSpec, TrainConfig, Variant};
use terzaghi_deeponet::eval::{sweep_cv, sweep_length_scale, GridSpec, SweepConfig, SweepTable};
use terzaghi_deeponet::nn::FourierSpec;
use terzaghi_deeponet::Result;

pub fn run(n: usize, epochs: usize, cases_per: usize, grid: GridSpec, seed: u64) -> Result<(SweepTable, SweepTable)> {
    let data = generate_dataset(&DatasetConfig {
        n,
        p: 50,
        seed,
        ..Default::default()
    })?;
    let spec = ModelSpec::new(Variant::M4, data.m, 50, 6, 30, FourierSpec::default())?;
    let cfg = TrainConfig {
        epochs,
        batch_size: 512,
        seed,
        lr_final: Some(1e-5),
        ..Default::default()
    };
    let model = train(&spec, &data, None, &cfg)?;
    let sweep = SweepConfig {
        cases_per,
        seed: seed + 1,
        grid,
        ..Default::default()
    };
    let cv = sweep_cv(&model, &[0.1, 0.3, 0.5, 0.7, 1.0, 1.2, 1.4], &sweep)?;
    let l = sweep_length_scale(&model, &[0.2, 0.35, 0.5, 0.65, 0.8], &sweep)?;
    Ok((cv, l))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let (cv, l) = run(500, 60, 10, GridSpec::default(), 5)?;
    print!("{}\n{}", cv.to_csv(), l.to_csv());
    Ok(())
}
