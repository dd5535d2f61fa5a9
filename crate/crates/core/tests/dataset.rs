use std::fs;
use std::path::Path;

use statrs::distribution::{ChiSquared, ContinuousCDF};
use terzaghi_deeponet::dataset::{generate_dataset, load_dataset, reference_field, save_dataset, DatasetConfig, OperatorDataset, TV_MAX};
use terzaghi_deeponet::Error;

fn series(z: f64, tv: f64, u0: f64) -> f64 {
    (0..4000)
        .map(|m| {
            let mm = std::f64::consts::FRAC_PI_2 * (2 * m + 1) as f64;
            2.0 * u0 / mm * (mm * z).sin() * (-mm * mm * tv).exp()
        })
        .sum()
}

fn small(n: usize, p: usize, seed: u64, mix: f64) -> OperatorDataset {
    generate_dataset(&DatasetConfig {
        n,
        p,
        seed,
        mix,
        ..Default::default()
    })
    .unwrap()
}

fn tv_of(ds: &OperatorDataset, i: usize, j: usize) -> f64 {
    let c = ds.case(i);
    ds.point(i, j).1 * c.cv / (c.h_dr * c.h_dr)
}

#[test]
fn uniform_targets_match_series() {
    let ds = small(20, 60, 3, 0.0);
    for i in 0..ds.n {
        let u0 = ds.case(i).u0[50];
        for j in 0..ds.p {
            let tv = tv_of(&ds, i, j);
            if tv < 0.01 {
                continue;
            }
            let (z, _) = ds.point(i, j);
            let err = (ds.target(i, j) - series(z, tv, u0)).abs();
            assert!(err <= 0.01 * u0, "case {i} point {j}: error {err} Pa");
        }
    }
}

#[test]
fn targets_interpolate_resolved_field() {
    let cfg = DatasetConfig {
        n: 6,
        p: 40,
        seed: 4,
        ..Default::default()
    };
    let ds = generate_dataset(&cfg).unwrap();
    for i in 0..ds.n {
        let case = ds.case(i);
        let field = reference_field(&case, cfg.nz, cfg.nt, &cfg.solver).unwrap();
        for j in 0..ds.p {
            let (z, _) = ds.point(i, j);
            let tv = tv_of(&ds, i, j);
            let target = ds.target(i, j);
            let corners = field.cell_corners(z, tv);
            let lo = corners.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = corners.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(target >= lo - 1e-9 && target <= hi + 1e-9, "target outside its cell");
            assert!((field.interpolate(z, tv) - target).abs() <= 1e-9 * target.abs().max(1.0));
        }
    }
}

#[test]
fn points_are_uniform_over_depth_and_time_factor() {
    let ds = small(200, 100, 5, 0.5);
    let mut counts = [0usize; 100];
    for i in 0..ds.n {
        for j in 0..ds.p {
            let (z, _) = ds.point(i, j);
            let tv = tv_of(&ds, i, j);
            let a = ((z * 10.0) as usize).min(9);
            let b = ((tv / TV_MAX * 10.0) as usize).min(9);
            counts[a * 10 + b] += 1;
        }
    }
    let expected = (ds.n * ds.p) as f64 / 100.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p_value = 1.0 - ChiSquared::new(99.0).unwrap().cdf(chi2);
    assert!(p_value > 1e-3, "chi² = {chi2}, p = {p_value}");
}

#[test]
fn validation_set_is_not_centred_by_training_stats() {
    let train = small(30, 20, 6, 0.5);
    let val = generate_dataset(&DatasetConfig {
        n: 30,
        p: 20,
        seed: 60,
        compute_stats: false,
        ..Default::default()
    })
    .unwrap();
    assert!(val.stats.is_none());
    let stats = train.stats.as_ref().unwrap();
    let own = train.standardized(stats).unwrap();
    let other = val.standardized(stats).unwrap();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&own.targets).abs() < 1e-6);
    assert!(mean(&other.targets).abs() > 1e-3);
}

fn edit_manifest(dir: &Path, f: impl FnOnce(&mut serde_json::Value)) {
    let path = dir.join("manifest.json");
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    f(&mut v);
    fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
}

#[test]
fn corrupted_files_are_rejected() {
    let ds = small(4, 5, 7, 0.5);
    let tmp = tempfile::tempdir().unwrap();

    let dir = tmp.path().join("magic");
    save_dataset(&ds, &dir).unwrap();
    edit_manifest(&dir, |v| v["magic"] = "something-else".into());
    assert!(matches!(load_dataset(&dir), Err(Error::Format { .. })));

    let dir = tmp.path().join("counts");
    save_dataset(&ds, &dir).unwrap();
    edit_manifest(&dir, |v| v["counts"]["n"] = 5.into());
    let err = load_dataset(&dir).unwrap_err();
    assert_eq!(err.exit_code(), 4, "{err}");

    let dir = tmp.path().join("flip");
    save_dataset(&ds, &dir).unwrap();
    let blob = dir.join("targets.bin");
    let mut bytes = fs::read(&blob).unwrap();
    bytes[3] ^= 0x40;
    fs::write(&blob, bytes).unwrap();
    assert!(load_dataset(&dir).is_err());

    let dir = tmp.path().join("short");
    save_dataset(&ds, &dir).unwrap();
    let blob = dir.join("cv.bin");
    let bytes = fs::read(&blob).unwrap();
    fs::write(&blob, &bytes[..bytes.len() - 8]).unwrap();
    assert!(load_dataset(&dir).is_err());
}

#[test]
fn regeneration_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    save_dataset(&small(5, 7, 8, 0.5), &a).unwrap();
    save_dataset(&small(5, 7, 8, 0.5), &b).unwrap();
    for name in ["manifest.json", "branch_inputs.bin", "cv.bin", "eval_points.bin", "targets.bin"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let loaded = load_dataset(&a).unwrap();
    assert_eq!(loaded.arrays, small(5, 7, 8, 0.5).arrays);
}
