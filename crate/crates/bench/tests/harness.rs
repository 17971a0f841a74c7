use picmc_bench::metrics::Phase;
use picmc_bench::sim::write_outputs;
use picmc_bench::{
    compute_parallel_efficiency, compute_speedup, run_simulation, run_simulation_with, weak_scaling_sweep,
    RunOptions,
};
use picmc_core::{Grid1D, LayoutVariant, RunConfig};
use proptest::prelude::*;

fn small(nc: usize, steps: u64) -> RunConfig {
    let mut c = RunConfig::desk_scale();
    c.grid = Grid1D::new(nc, nc as f64 * 1e-5).unwrap();
    c.n_steps = steps;
    c.grainsize = 16;
    c
}

#[test]
fn zero_steps_reports_initial_state_only() {
    let m = run_simulation(&small(50, 0)).unwrap();
    assert_eq!(m.diagnostics.len(), 1);
    assert_eq!(m.diagnostics[0].step, 0);
    assert_eq!(m.diagnostics[0].totals, vec![500, 500, 500]);
    for p in Phase::ALL {
        assert_eq!(m.phases.get(p), 0.0, "{}", p.name());
    }
}

#[test]
fn without_field_solver_smooth_and_solve_stay_zero() {
    let m = run_simulation(&small(100, 20)).unwrap();
    assert_eq!(m.phases.get(Phase::Smooth), 0.0);
    assert_eq!(m.phases.get(Phase::Solve), 0.0);
    assert!(m.phases.get(Phase::Mover) > 0.0);
    assert!(m.phases.get(Phase::Total) >= m.phases.get(Phase::Mover));
    assert_eq!(m.diagnostics.len(), 21);
}

#[test]
fn reruns_write_identical_physics_files() {
    let mut c = small(64, 50);
    c.field_solver = true;
    c.workers = 2;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = run_simulation_with(&c, RunOptions::default()).unwrap();
        write_outputs(&out, &c, d.path()).unwrap();
    }
    for name in ["diagnostics.csv", "collisions.csv", "fields.csv"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name}");
    }
    let metrics = std::fs::read_to_string(dirs[0].path().join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("phase,seconds\n"));
    assert_eq!(metrics.lines().count(), 1 + Phase::ALL.len());
}

#[test]
fn weak_scaling_grows_the_grid() {
    let report = weak_scaling_sweep(&small(100, 5), &[1, 4]).unwrap();
    let nc: Vec<usize> = report.rows.iter().map(|r| r.nc).collect();
    assert_eq!(nc, vec![100, 400]);
    assert_eq!(report.rows[0].speedup, 1.0);
    assert_eq!(report.rows[0].pe, 100.0);
    assert_eq!(report.rows[0].initial_particles_per_worker, report.rows[1].initial_particles_per_worker);
    let r = &report.rows[1];
    assert!((r.speedup - 4.0 / r.runtime_ratio).abs() <= 1e-9 * r.speedup);
}

#[test]
fn layout_runs_match_cell_sorted_run() {
    let mut c = small(64, 40);
    c.field_solver = true;
    let reference = run_simulation_with(&c, RunOptions::default()).unwrap();
    for l in [LayoutVariant::VectorOfStructs, LayoutVariant::ArrayOfStructs] {
        c.layout = l;
        let out = run_simulation_with(&c, RunOptions::default()).unwrap();
        assert_eq!(out.metrics.diagnostics, reference.metrics.diagnostics, "{l}");
        assert_eq!(out.stores, reference.stores, "{l}");
        assert_eq!(out.metrics.phases.get(Phase::Gather), 0.0);
    }
}

#[test]
fn bad_metric_inputs_are_errors() {
    assert!(compute_speedup(1.0, 0.0).is_err());
    assert!(compute_speedup(-1.0, 1.0).is_err());
    assert!(compute_parallel_efficiency(2.0, 0).is_err());
}

proptest! {
    #[test]
    fn efficiency_is_speedup_per_worker(t1 in 1e-3f64..1e3, tn in 1e-3f64..1e3, w in 1usize..512) {
        let s = compute_speedup(t1, tn).unwrap();
        prop_assert!((s * tn - t1).abs() <= 1e-12 * t1);
        let pe = compute_parallel_efficiency(s, w).unwrap();
        prop_assert!((pe * w as f64 - 100.0 * s).abs() <= 1e-9 * s * 100.0);
    }
}
