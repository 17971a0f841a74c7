use std::ops::Range;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::RunConfig;
use crate::constants::EV_TO_J;
use crate::error::{PicError, Result};
use crate::rng::{stream, StreamKind};
use crate::store::{CellSortedStore, Particle};

/// Thermal speed per velocity component in grid units (dx per base step).
pub fn thermal_sigma_grid(temperature_ev: f64, mass_kg: f64, dx_m: f64, dt_s: f64) -> f64 {
    (temperature_ev * EV_TO_J / mass_kg).sqrt() * dt_s / dx_m
}

/// Uniform Maxwellian plasma over the whole grid.
pub fn init_plasma(config: &RunConfig) -> Result<CellSortedStore> {
    init_plasma_range(config, 0..config.grid.nc())
}

/// Initializes only the global cells in `cells`. Every (species, cell) pair
/// draws from its own stream, so any partition of the grid yields the same
/// particles as the undecomposed call.
pub fn init_plasma_range(config: &RunConfig, cells: Range<usize>) -> Result<CellSortedStore> {
    let nc = config.grid.nc();
    if cells.end > nc || cells.start >= cells.end {
        return Err(PicError::InvalidConfig(format!("cell range {cells:?} outside 0..{nc}")));
    }
    if let Some(cap) = config.max_particles {
        for d in &config.species {
            let requested = (config.ppc0 as u64).saturating_mul(nc as u64);
            if requested > cap {
                return Err(PicError::AllocationCap { species: d.name.clone(), requested, cap });
            }
        }
    }

    let capacity = (config.slack_factor * config.ppc0 as f64).ceil() as usize;
    let mut store =
        CellSortedStore::empty_range(nc, cells.clone(), &config.track_transverse(), capacity);
    let dx = config.grid.dx_m();
    for (isp, def) in config.species.iter().enumerate() {
        let sigma = thermal_sigma_grid(config.temperatures_ev[isp], def.mass_kg, dx, config.dt_s);
        let draw = |rng: &mut _| -> f64 {
            if sigma == 0.0 {
                0.0
            } else {
                sigma * Rng::sample::<f64, _>(rng, StandardNormal)
            }
        };
        for (local, global) in cells.clone().enumerate() {
            let mut rng = stream(config.seed, StreamKind::Init, isp, global, 0);
            for _ in 0..config.ppc0 {
                let x: f64 = rng.random();
                let vx = draw(&mut rng);
                let vy = draw(&mut rng);
                let vz = draw(&mut rng);
                let yp = if def.track_transverse { rng.random() } else { 0.0 };
                store.push(isp, local, Particle { x, yp, vx, vy, vz });
            }
        }
    }
    Ok(store)
}
