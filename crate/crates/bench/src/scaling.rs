use std::io;

use picmc_core::{Result, RunConfig};

use crate::metrics::{compute_parallel_efficiency, compute_speedup, Phase};
use crate::sim::{run_simulation_with, DiagRow, RunOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub workers: usize,
    pub nc: usize,
    pub t_total: f64,
    pub t_mover: f64,
    /// Strong: `T(1) / T(n)`. Weak: `n T(1) / T(n)`, the scaled speedup.
    pub speedup: f64,
    pub pe: f64,
    /// `T(n) / T(1)`.
    pub runtime_ratio: f64,
    pub initial_particles_per_worker: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Strong sweeps only: whether every row reproduced the single-worker
    /// diagnostics exactly.
    pub diagnostics_identical: Option<bool>,
}

struct Sample {
    t_total: f64,
    t_mover: f64,
    diagnostics: Vec<DiagRow>,
}

fn sample(config: &RunConfig) -> Result<Sample> {
    let mut c = config.clone();
    c.output_dir = None;
    let out = run_simulation_with(&c, RunOptions::default())?;
    let p = out.metrics.phases;
    Ok(Sample { t_total: p.get(Phase::Total), t_mover: p.get(Phase::Mover), diagnostics: out.metrics.diagnostics })
}

fn initial_total(s: &Sample) -> u64 {
    s.diagnostics[0].totals.iter().sum()
}

/// Fixed problem size, one run per worker count, speedup against one worker.
pub fn strong_scaling_sweep(config: &RunConfig, workers: &[usize]) -> Result<ScalingReport> {
    let mut one = config.clone();
    one.workers = 1;
    let reference = sample(&one)?;
    let mut rows = Vec::with_capacity(workers.len());
    let mut identical = true;
    for &w in workers {
        let s = if w == 1 {
            Sample { t_total: reference.t_total, t_mover: reference.t_mover, diagnostics: reference.diagnostics.clone() }
        } else {
            let mut c = config.clone();
            c.workers = w;
            sample(&c)?
        };
        identical &= s.diagnostics == reference.diagnostics;
        let speedup = compute_speedup(reference.t_total, s.t_total)?;
        rows.push(ScalingRow {
            workers: w,
            nc: config.grid.nc(),
            t_total: s.t_total,
            t_mover: s.t_mover,
            speedup,
            pe: compute_parallel_efficiency(speedup, w)?,
            runtime_ratio: s.t_total / reference.t_total,
            initial_particles_per_worker: initial_total(&s) / w as u64,
        });
    }
    Ok(ScalingReport { rows, diagnostics_identical: Some(identical) })
}

/// Cell count grows with the worker count; the reference is one worker on
/// the base grid.
pub fn weak_scaling_sweep(config: &RunConfig, workers: &[usize]) -> Result<ScalingReport> {
    let mut base = config.clone();
    base.workers = 1;
    let reference = sample(&base)?;
    let mut rows = Vec::with_capacity(workers.len());
    for &w in workers {
        let mut c = config.clone();
        c.workers = w;
        c.grid = config.grid.scaled(w)?;
        let s = if w == 1 {
            Sample { t_total: reference.t_total, t_mover: reference.t_mover, diagnostics: Vec::new() }
        } else {
            sample(&c)?
        };
        let ratio = compute_speedup(reference.t_total, s.t_total)?;
        let speedup = ratio * w as f64;
        let particles = if w == 1 { initial_total(&reference) } else { initial_total(&s) };
        rows.push(ScalingRow {
            workers: w,
            nc: c.grid.nc(),
            t_total: s.t_total,
            t_mover: s.t_mover,
            speedup,
            pe: compute_parallel_efficiency(speedup, w)?,
            runtime_ratio: 1.0 / ratio,
            initial_particles_per_worker: particles / w as u64,
        });
    }
    Ok(ScalingReport { rows, diagnostics_identical: None })
}

/// Writes `workers,t_total,t_mover,speedup,pe`.
pub fn write_scaling_csv<W: io::Write>(report: &ScalingReport, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["workers", "t_total", "t_mover", "speedup", "pe"])?;
    for r in &report.rows {
        w.write_record([
            r.workers.to_string(),
            format!("{:.6}", r.t_total),
            format!("{:.6}", r.t_mover),
            format!("{:.4}", r.speedup),
            format!("{:.2}", r.pe),
        ])?;
    }
    w.flush()?;
    Ok(())
}
