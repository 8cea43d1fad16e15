//! Every example runs and produces sensible output.

#[path = "../examples/kernel_and_mollifier.rs"]
mod kernel_and_mollifier;
#[path = "../examples/bkw_exact_solution.rs"]
mod bkw_exact_solution;
#[path = "../examples/particle_fields.rs"]
mod particle_fields;
#[path = "../examples/bkw_time_stepping.rs"]
mod bkw_time_stepping;
#[path = "../examples/treecode_accuracy.rs"]
mod treecode_accuracy;
#[path = "../examples/convergence_study.rs"]
mod convergence_study;
#[path = "../examples/config_and_outputs.rs"]
mod config_and_outputs;

#[test]
fn kernel_and_mollifier() {
    let lines = kernel_and_mollifier::run_example().unwrap();
    assert_eq!(lines.len(), 7);
}

#[test]
fn bkw_exact_solution() {
    for (d, _, k, mass, energy) in bkw_exact_solution::run_example().unwrap() {
        assert!(k <= 1.0);
        assert!((mass - 1.0).abs() < 1e-6);
        assert!((energy - d as f64).abs() < 1e-5);
    }
}

#[test]
fn particle_fields() {
    let s = particle_fields::run_example().unwrap();
    assert!(s.particles > 500);
    assert!(s.momentum_rate.iter().all(|m| m.abs() < 1e-14));
    assert!(s.energy_rate.abs() < 1e-14);
    assert!(s.dissipation > 0.0);
    assert!((s.dissipation - s.dissipation_from_velocity).abs() < 1e-10 * s.dissipation);
}

#[test]
fn bkw_time_stepping() {
    let (records, rel_l2) = bkw_time_stepping::run_example().unwrap();
    assert_eq!(records.len(), 51);
    assert!(records.windows(2).all(|w| w[1].entropy <= w[0].entropy));
    assert!(rel_l2 < 0.2);
}

#[test]
fn treecode_accuracy() {
    let rows = treecode_accuracy::run_example().unwrap();
    assert!(rows.windows(2).all(|w| w[1].1 <= w[0].1));
    assert!(rows.last().unwrap().1 < 1e-3);
}

#[test]
fn convergence_study() {
    let report = convergence_study::run_example().unwrap();
    let s = report.slopes.unwrap();
    assert!(s.l1 > 1.0 && s.l2 > 1.0);
}

#[test]
fn config_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = config_and_outputs::run_example(dir.path()).unwrap();
    // five steps: snapshots at 0, 2, 4 and the final step
    assert_eq!(manifest.files.len(), 2 + 4 * 3);
    assert!(manifest.wall_seconds.is_none());
}
