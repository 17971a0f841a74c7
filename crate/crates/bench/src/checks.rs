//! Quick self-checks behind the `validate` subcommand.

use std::f64::consts::TAU;

use picmc_core::fields::{poisson_residual, solve_poisson};
use picmc_core::{FieldBoundary, Grid1D, PhysicalConstants, Result, RunConfig};

use crate::metrics::{compute_parallel_efficiency, compute_speedup};
use crate::sim::{run_simulation_with, RunOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Neutral count per step from forward Euler on `dn/dt = -n n_e R`, where
/// each ionization also adds an electron.
pub fn coupled_depletion(n0: f64, ne0: f64, rate_m3s: f64, dt_s: f64, steps: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(steps as usize + 1);
    let mut n = n0;
    out.push(n);
    for _ in 0..steps {
        let ne = ne0 + (n0 - n);
        n -= n * ne * rate_m3s * dt_s;
        out.push(n);
    }
    out
}

fn sine_l2(nc: usize) -> (f64, f64) {
    let grid = Grid1D::new(nc, 1.0).expect("valid grid");
    let consts = PhysicalConstants::new(1.0, 1.0).expect("valid constants");
    let rho: Vec<f64> = (0..=nc).map(|j| (TAU * grid.node_x(j)).sin()).collect();
    let sol = solve_poisson(&rho, &grid, &consts, FieldBoundary::Periodic).expect("nc >= 3");
    let amp = 1.0 / (TAU * TAU);
    let err = (0..nc).map(|j| (sol.phi[j] - amp * (TAU * grid.node_x(j)).sin()).powi(2)).sum::<f64>();
    ((err / nc as f64).sqrt(), poisson_residual(&sol.phi, &rho, &grid, &consts, true))
}

pub fn run_checks(config: &RunConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    config.validate()?;
    checks.push(Check { name: "config", passed: true, detail: format!("hash {}", config.fingerprint()) });

    let (e64, r64) = sine_l2(64);
    let (e128, r128) = sine_l2(128);
    let ratio = e64 / e128;
    checks.push(Check {
        name: "poisson",
        passed: (3.7..=4.3).contains(&ratio) && r64.max(r128) <= 1e-10,
        detail: format!("L2 ratio {ratio:.4}, residual {:.2e}", r64.max(r128)),
    });

    let pairs = [(8.76, 16, 54.75), (8.77, 16, 54.81), (8.14, 16, 50.87), (15.54, 100, 15.54)];
    let worst = pairs
        .iter()
        .map(|&(s, w, pe)| compute_parallel_efficiency(s, w).map(|v| (v - pe).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let unit = compute_parallel_efficiency(compute_speedup(2.5, 2.5)?, 1)?;
    checks.push(Check {
        name: "metrics",
        passed: worst <= 0.02 && unit == 100.0,
        detail: format!("max deviation {worst:.4} points"),
    });

    if config.collisions.as_ref().is_some_and(|c| c.enabled) {
        checks.push(ionization_decay(config, DECAY_ENSEMBLE)?);
    }
    Ok(checks)
}

/// Seeds averaged by the decay check. Single runs scatter by about 1.5%
/// around the ensemble mean at the half-depletion step.
pub const DECAY_ENSEMBLE: u64 = 4;

/// Ensemble-mean species totals per step over seeds `seed..seed + runs`.
pub fn mean_totals_history(config: &RunConfig, runs: u64) -> Result<Vec<Vec<f64>>> {
    let nsp = config.species.len();
    let mut sum = vec![vec![0.0; nsp]; config.n_steps as usize + 1];
    for r in 0..runs {
        let mut cfg = config.clone();
        cfg.seed = config.seed.wrapping_add(r);
        let out = run_simulation_with(&cfg, RunOptions::default())?;
        for (s, row) in sum.iter_mut().zip(&out.metrics.diagnostics) {
            for (a, &t) in s.iter_mut().zip(&row.totals) {
                *a += t as f64 / runs as f64;
            }
        }
    }
    Ok(sum)
}

fn ionization_decay(config: &RunConfig, runs: u64) -> Result<Check> {
    let c = config.collisions.as_ref().expect("collisions configured");
    let table = config.species_table();
    let ni = table.index_of(&c.neutral).expect("validated");
    let ei = table.index_of(&c.electron).expect("validated");
    let history = mean_totals_history(config, runs)?;
    let n0 = history[0][ni];
    let ne0 = history[0][ei];
    // Mean density from the macro count over all cells.
    let w = table.macro_density_m3[ni] / config.grid.nc() as f64;
    let oracle = coupled_depletion(n0 * w, ne0 * w, c.rates.rate_ionization_m3s, config.dt_s, config.n_steps);
    Ok(match oracle.iter().position(|n| *n <= 0.5 * n0 * w) {
        Some(k) => {
            let rel = (history[k][ni] * w - oracle[k]).abs() / oracle[k];
            Check {
                name: "ionization-decay",
                passed: rel <= 0.05,
                detail: format!("step {k}: relative deviation {rel:.4} ({runs}-seed mean)"),
            }
        }
        None => Check {
            name: "ionization-decay",
            passed: false,
            detail: format!("half depletion not reached in {} steps", config.n_steps),
        },
    })
}
