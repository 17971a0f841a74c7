use std::f64::consts::{PI, TAU};

use picmc_core::constants::{DEUTERON_MASS, ELECTRON_MASS, ELEMENTARY_CHARGE};
use picmc_core::fields::{compute_efield, deposit_charge, poisson_residual, smooth_density, solve_poisson};
use picmc_core::{init_plasma, FieldBoundary, Grid1D, PhysicalConstants, RunConfig, SpeciesDef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn plasma_config(nc: usize, ppc0: usize) -> RunConfig {
    let mut c = RunConfig::desk_scale();
    c.grid = Grid1D::new(nc, nc as f64 * 1e-5).unwrap();
    c.species = vec![
        SpeciesDef::new("e", -ELEMENTARY_CHARGE, ELECTRON_MASS),
        SpeciesDef::new("D+", ELEMENTARY_CHARGE, DEUTERON_MASS),
    ];
    c.temperatures_ev = vec![1.0, 1.0];
    c.densities_m3 = vec![1e20, 1e20];
    c.ppc0 = ppc0;
    c.collisions = None;
    c
}

/// Standard deviation of one node's net charge (in macro-particle units) for
/// two independent species of `ppc0` uniform particles per cell, by sampling.
fn sampled_node_sigma(ppc0: usize, trials: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..trials {
        let mut node = 0.0;
        for sign in [1.0, -1.0] {
            for _ in 0..ppc0 {
                node += sign * rng.random::<f64>();
                node += sign * (1.0 - rng.random::<f64>());
            }
        }
        sum += node;
        sum2 += node * node;
    }
    let mean = sum / trials as f64;
    (sum2 / trials as f64 - mean * mean).sqrt()
}

#[test]
fn uniform_plasma_density_within_shot_noise() {
    let ppc0 = 50;
    let c = plasma_config(200, ppc0);
    let store = init_plasma(&c).unwrap();
    let table = c.species_table();
    let rho = deposit_charge(&store, &c.grid, &table, FieldBoundary::Periodic).unwrap();
    let sigma_macro = sampled_node_sigma(ppc0, 20_000);
    assert!((sigma_macro - (ppc0 as f64 / 3.0).sqrt()).abs() < 0.05 * sigma_macro);
    let sigma = sigma_macro * table.charge_density_per_macro(1);
    let worst = rho.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    assert!(worst <= 5.0 * sigma, "max |rho| {worst} vs 5 sigma {}", 5.0 * sigma);
    assert!(worst > 0.0);
}

#[test]
fn deposit_conserves_total_charge() {
    let nc = 1000;
    let mut c = plasma_config(nc, 500);
    c.species.truncate(1);
    c.temperatures_ev.truncate(1);
    c.densities_m3.truncate(1);
    let store = init_plasma(&c).unwrap();
    let table = c.species_table();
    let dx = c.grid.dx_m();
    let total = store.store_total(0) as f64 * table.charge_density_per_macro(0) * dx;

    let rho = deposit_charge(&store, &c.grid, &table, FieldBoundary::Periodic).unwrap();
    let periodic: f64 = rho[..nc].iter().sum::<f64>() * dx;
    assert!(((periodic - total) / total).abs() <= 1e-12);

    let bc = FieldBoundary::Dirichlet { phi_left: 0.0, phi_right: 0.0 };
    let rho = deposit_charge(&store, &c.grid, &table, bc).unwrap();
    let walls: f64 = (0..=nc).map(|j| if j == 0 || j == nc { 0.5 } else { 1.0 } * rho[j]).sum::<f64>() * dx;
    assert!(((walls - total) / total).abs() <= 1e-12);

    let smoothed = smooth_density(&rho, 3);
    let a: f64 = rho[..nc].iter().sum();
    let b: f64 = smoothed[..nc].iter().sum();
    assert!(((a - b) / a).abs() <= 1e-13);
}

fn sine_errors(nc: usize) -> (f64, f64, f64) {
    let l = 0.37;
    let grid = Grid1D::new(nc, l).unwrap();
    let consts = PhysicalConstants::new(8.854e-12, 1e-12).unwrap();
    let rho0 = 2.5e-6;
    let k = TAU / l;
    let rho: Vec<f64> = (0..=nc).map(|j| rho0 * (k * grid.node_x(j)).sin()).collect();
    let sol = solve_poisson(&rho, &grid, &consts, FieldBoundary::Periodic).unwrap();
    let e = compute_efield(&sol.phi, &grid, FieldBoundary::Periodic);
    let amp = rho0 * l * l / (4.0 * PI * PI * consts.epsilon0);
    let mut err_phi = 0.0;
    let mut err_e = 0.0;
    for j in 0..nc {
        let x = grid.node_x(j);
        err_phi += (sol.phi[j] - amp * (k * x).sin()).powi(2);
        err_e += (e[j] + amp * k * (k * x).cos()).powi(2);
    }
    let neutral: Vec<f64> = rho.iter().map(|r| r - sol.removed_mean_rho).collect();
    let res = poisson_residual(&sol.phi, &neutral, &grid, &consts, true);
    ((err_phi / nc as f64).sqrt(), (err_e / nc as f64).sqrt(), res)
}

#[test]
fn periodic_poisson_second_order() {
    let (p64, e64, r64) = sine_errors(64);
    let (p128, e128, r128) = sine_errors(128);
    let ratio = p64 / p128;
    assert!((3.7..=4.3).contains(&ratio), "potential ratio {ratio}");
    let ratio = e64 / e128;
    assert!((3.7..=4.3).contains(&ratio), "field ratio {ratio}");
    assert!(r64 <= 1e-10 && r128 <= 1e-10);
}

#[test]
fn maxwellian_second_moment() {
    let mut c = plasma_config(10_000, 100);
    c.species.truncate(1);
    c.temperatures_ev = vec![20.0];
    c.densities_m3.truncate(1);
    let s = init_plasma(&c).unwrap();
    let n = s.store_total(0) as f64;
    let mean_sq: f64 = s.species[0].cells.iter().flat_map(|cell| cell.vx.iter()).map(|v| v * v).sum::<f64>() / n;
    let sigma = picmc_core::init::thermal_sigma_grid(20.0, ELECTRON_MASS, c.grid.dx_m(), c.dt_s);
    assert!(((mean_sq - sigma * sigma) / (sigma * sigma)).abs() < 0.01);
}
