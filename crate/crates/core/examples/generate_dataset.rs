//! Generates a small operator-learning dataset, writes it to disk and reads
//! it back.

use std::path::Path;

use terzaghi_deeponet::dataset::{generate_dataset, load_dataset, save_dataset, DatasetConfig, OperatorDataset};
use terzaghi_deeponet::Result;

pub fn run(dir: &Path, n: usize, p: usize, seed: u64) -> Result<OperatorDataset> {
    let cfg = DatasetConfig {
        n,
        p,
        seed,
        ..Default::default()
    };
    let ds = generate_dataset(&cfg)?;
    save_dataset(&ds, dir)?;
    load_dataset(dir)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "target/example-data/train".into());
    let ds = run(Path::new(&dir), 200, 100, 7)?;
    println!("{} cases × {} sensors × {} points in {dir}", ds.n, ds.m, ds.p);
    println!("GRF cases {}, uniform cases {}", ds.meta.grf_cases, ds.meta.uniform_cases);
    if let Some(s) = &ds.stats {
        println!("target mean {:.1} Pa, std {:.1} Pa", s.target_mean, s.target_std);
    }
    let (z, t) = ds.point(0, 0);
    println!("case 0: cv {:.3}, first point z {z:.3} t {t:.3} yr -> {:.1} Pa", ds.case(0).cv, ds.target(0, 0));
    Ok(())
}
