//! Runs every example at reduced size.

#[allow(dead_code)]
#[path = "../examples/solve_consolidation.rs"]
mod solve_consolidation;
#[allow(dead_code)]
#[path = "../examples/random_fields.rs"]
mod random_fields;
#[allow(dead_code)]
#[path = "../examples/generate_dataset.rs"]
mod generate_dataset;
#[allow(dead_code)]
#[path = "../examples/train_deeponet.rs"]
mod train_deeponet;
#[allow(dead_code)]
#[path = "../examples/compare_architectures.rs"]
mod compare_architectures;
#[allow(dead_code)]
#[path = "../examples/ood_sweeps.rs"]
mod ood_sweeps;
#[allow(dead_code)]
#[path = "../examples/benchmark_solvers.rs"]
mod benchmark_solvers;
#[allow(dead_code)]
#[path = "../examples/gradient_check.rs"]
mod gradient_check;

use terzaghi_deeponet::deeponet::Variant;
use terzaghi_deeponet::eval::GridSpec;

#[test]
fn solvers_track_series() {
    let s = solve_consolidation::run(0.5, 15e3, 60, 40).unwrap();
    assert!(s.bdf_max_err < 150.0, "{}", s.bdf_max_err);
    assert!(s.rk45_max_err < 150.0, "{}", s.rk45_max_err);
    assert!(s.bdf_steps > 0);
}

#[test]
fn grf_statistics() {
    for s in random_fields::run(3000, 0.3, 9).unwrap() {
        assert!((s.variance - 1.0).abs() < 0.1, "variance {}", s.variance);
        assert!((s.corr - s.kernel).abs() < 0.1, "l={} corr {} kernel {}", s.length_scale, s.corr, s.kernel);
    }
}

#[test]
fn dataset_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate_dataset::run(dir.path(), 6, 8, 3).unwrap();
    assert_eq!((ds.n, ds.m, ds.p), (6, 100, 8));
    assert!(ds.stats.is_some());
}

#[test]
fn training_reduces_loss() {
    let dir = tempfile::tempdir().unwrap();
    let s = train_deeponet::run(dir.path(), 20, 4, 10, 1).unwrap();
    assert!(s.final_loss < s.initial_loss);
    assert!(s.val_mse_pa2.is_finite() && s.grid_mse_pa2.is_finite());
    assert!(dir.path().join("model.json").exists());
}

#[test]
fn architecture_table() {
    let rows = compare_architectures::run(12, 2, 2, 8, 2).unwrap();
    assert_eq!(rows.iter().map(|r| r.variant).collect::<Vec<_>>(), Variant::ALL.to_vec());
    assert!(rows.iter().all(|r| r.test_mse_pa2.is_finite() && r.params > 0));
}

#[test]
fn sweep_tables() {
    let (cv, l) = ood_sweeps::run(12, 2, 2, GridSpec { nz: 12, nt: 6 }, 4).unwrap();
    assert_eq!(cv.rows.len(), 7);
    assert_eq!(l.rows.len(), 5);
    assert!(!cv.row(1.4).unwrap().in_distribution && cv.row(0.5).unwrap().in_distribution);
}

#[test]
fn benchmark_records() {
    let r = benchmark_solvers::run(30, GridSpec { nz: 20, nt: 20 }, 6).unwrap();
    assert_eq!(r.records.len(), 3);
    assert!(r.records.iter().all(|t| t.seconds.len() == 30));
}

#[test]
fn gradients_match_finite_differences() {
    for v in Variant::ALL {
        let e = gradient_check::relative_error(v, 2, 6, 3, 1e-5, 8).unwrap();
        assert!(e < 1e-6, "{v}: {e}");
    }
}
