//! Trains all four DeepONet variants on the same data and reports held-out
//! test MSE.

use terzaghi_deeponet::dataset::{generate_dataset, DatasetConfig};
use terzaghi_deeponet::deeponet::{train, ModelSpec, TrainConfig, Variant};
use terzaghi_deeponet::eval::dataset_mse;
use terzaghi_deeponet::nn::FourierSpec;
use terzaghi_deeponet::Result;

pub struct ArchitectureScore {
    pub variant: Variant,
    pub params: usize,
    pub test_mse_pa2: f64,
    pub seconds: f64,
}

pub fn run(n: usize, epochs: usize, depth: usize, width: usize, seed: u64) -> Result<Vec<ArchitectureScore>> {
    let data = generate_dataset(&DatasetConfig {
        n,
        p: 50,
        seed,
        ..Default::default()
    })?;
    let test = generate_dataset(&DatasetConfig {
        n: (n / 4).max(4),
        p: 100,
        seed: seed + 1000,
        compute_stats: false,
        ..Default::default()
    })?;
    let cfg = TrainConfig {
        epochs,
        batch_size: 512,
        seed,
        lr_final: Some(1e-5),
        ..Default::default()
    };
    let mut out = Vec::new();
    for variant in Variant::ALL {
        let spec = ModelSpec::new(variant, data.m, 50, depth, width, FourierSpec::default())?;
        let start = std::time::Instant::now();
        let state = train(&spec, &data, None, &cfg)?;
        out.push(ArchitectureScore {
            variant,
            params: spec.param_count(),
            test_mse_pa2: dataset_mse(&state, &test)?.mse_pa2,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    println!("model  params  test MSE (Pa²)  train s");
    for s in run(500, 60, 6, 30, 11)? {
        println!("{:<5}  {:>6}  {:>13.4e}  {:>7.1}", s.variant.to_string(), s.params, s.test_mse_pa2, s.seconds);
    }
    Ok(())
}
