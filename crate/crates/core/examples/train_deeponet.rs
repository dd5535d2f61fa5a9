//! Trains the trunk-cv DeepONet on generated data, saves it and evaluates it
//! on fresh cases against the BDF reference.

use std::path::Path;

use terzaghi_deeponet::dataset::{generate_dataset, sample_cases, DatasetConfig};
use terzaghi_deeponet::deeponet::{load_model, save_model, train_with_progress, ModelSpec, TrainConfig, Variant};
use terzaghi_deeponet::eval::{aggregate, dataset_mse, GridSpec};
use terzaghi_deeponet::nn::FourierSpec;
use terzaghi_deeponet::ode::IntegratorConfig;
use terzaghi_deeponet::Result;

pub struct TrainSummary {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub val_mse_pa2: f64,
    pub grid_mse_pa2: f64,
}

pub fn run(dir: &Path, n: usize, epochs: usize, width: usize, seed: u64) -> Result<TrainSummary> {
    let data = generate_dataset(&DatasetConfig {
        n,
        p: 50,
        seed,
        ..Default::default()
    })?;
    let val = generate_dataset(&DatasetConfig {
        n: (n / 10).max(4),
        p: 50,
        seed: seed + 1,
        compute_stats: false,
        ..Default::default()
    })?;
    let spec = ModelSpec::new(Variant::M3, data.m, 50, 6, width, FourierSpec::default())?;
    let cfg = TrainConfig {
        epochs,
        batch_size: 512,
        seed,
        lr_final: Some(1e-5),
        ..Default::default()
    };
    let every = (epochs / 10).max(1);
    let state = train_with_progress(&spec, &data, Some(&val), &cfg, &mut |r| {
        if r.epoch % every == 0 {
            eprintln!("epoch {:>4}  train {:.3e}  val {:.3e}", r.epoch, r.train_loss, r.val_loss.unwrap_or(f64::NAN));
        }
    })?;
    save_model(&state, dir)?;
    let model = load_model(dir)?;
    let fresh = sample_cases(&DatasetConfig {
        n: 5,
        seed: seed + 2,
        ..Default::default()
    })?;
    let report = aggregate(&model, &fresh, GridSpec { nz: 50, nt: 50 }, &IntegratorConfig::default())?;
    Ok(TrainSummary {
        initial_loss: state.history[0].train_loss,
        final_loss: state.history.last().map_or(f64::NAN, |r| r.train_loss),
        val_mse_pa2: dataset_mse(&model, &val)?.mse_pa2,
        grid_mse_pa2: report.mean_mse_pa2,
    })
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "target/example-models/m3".into());
    let s = run(Path::new(&dir), 500, 60, 30, 3)?;
    println!("train loss {:.3e} -> {:.3e} (standardized)", s.initial_loss, s.final_loss);
    println!("validation MSE {:.4e} Pa², grid MSE on fresh cases {:.4e} Pa²", s.val_mse_pa2, s.grid_mse_pa2);
    println!("model saved to {dir}");
    Ok(())
}
