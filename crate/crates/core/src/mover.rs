//! Velocity and position push, subcycling, periodic wrap and the cell-transfer
//! resort.

use std::time::Instant;

use picmc_scheduler::Scheduler;

use crate::constants::PhysicalConstants;
use crate::error::{PicError, Result};
use crate::fields::{gather_cell, interpolate, ParticleField};
use crate::grid::Grid1D;
use crate::species::{SpeciesDef, SpeciesTable};
use crate::store::{CellParticles, CellSortedStore, Particle};

/// Velocity change in SI units for one step: `(q/m) E dt`.
pub fn velocity_kick_si(charge_over_mass: f64, e: f64, dt_s: f64) -> f64 {
    charge_over_mass * e * dt_s
}

/// Multiplier taking a field value in V/m to a velocity change in grid units
/// for one (possibly subcycled) push of `def`.
pub fn kick_factor(def: &SpeciesDef, consts: &PhysicalConstants, dx_m: f64) -> f64 {
    velocity_kick_si(def.charge_over_mass(), 1.0, f64::from(def.nstep) * consts.dt_s) * consts.dt_s / dx_m
}

pub fn kick_cell(cell: &mut CellParticles, e_p: &[f64], kick: f64) {
    debug_assert_eq!(cell.len(), e_p.len());
    for (v, e) in cell.vx.iter_mut().zip(e_p) {
        *v += e * kick;
    }
}

pub fn drift_cell(cell: &mut CellParticles, nstep: f64) {
    for (x, v) in cell.x.iter_mut().zip(&cell.vx) {
        *x += nstep * v;
    }
    for (y, v) in cell.yp.iter_mut().zip(&cell.vy) {
        *y += nstep * v;
    }
}

/// Gather, kick and drift in one pass over a cell whose left node is `node`.
/// Same arithmetic as the separate gather, [`kick_cell`] and [`drift_cell`].
#[inline]
pub fn advance_cell(cell: &mut CellParticles, e: &[f64], node: usize, kick: Option<f64>, nstep: f64) {
    if let Some(k) = kick {
        for (x, v) in cell.x.iter().zip(cell.vx.iter_mut()) {
            *v += interpolate(e, node, *x) * k;
        }
    }
    drift_cell(cell, nstep);
}

/// `vx += (q/m) E_p dt` in grid units for every particle of species `isp`.
pub fn push_velocity(
    store: &mut CellSortedStore,
    isp: usize,
    species: &SpeciesTable,
    e_p: &ParticleField,
    grid: &Grid1D,
    consts: &PhysicalConstants,
) -> Result<()> {
    let def = &species.defs[isp];
    if !def.charged {
        return Err(PicError::Contract(format!("push_velocity on neutral species `{}`", def.name)));
    }
    let kick = kick_factor(def, consts, grid.dx_m());
    for (cell, ep) in store.species[isp].cells.iter_mut().zip(&e_p[isp]) {
        kick_cell(cell, ep, kick);
    }
    Ok(())
}

/// `x += nstep vx` (and `yp += nstep vy` when tracked) for species `isp`.
pub fn push_position(store: &mut CellSortedStore, isp: usize, species: &SpeciesTable) {
    let nstep = f64::from(species.defs[isp].nstep);
    for cell in &mut store.species[isp].cells {
        drift_cell(cell, nstep);
    }
}

/// A particle leaving its cell. Cells are global indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transfer {
    pub species: usize,
    pub src: usize,
    pub dest: usize,
    pub particle: Particle,
}

/// Whole-cell shift and in-cell offset of an out-of-range position.
#[inline]
pub fn split_offset(x: f64) -> (i64, f64) {
    let f = x.floor();
    let mut rest = x - f;
    let mut shift = f as i64;
    // x slightly below an integer can round up to exactly 1.
    if rest >= 1.0 {
        rest = 0.0;
        shift += 1;
    }
    (shift, rest)
}

/// Removes every particle whose offset left `[0, 1)` and returns it with its
/// destination cell, in (species, cell, particle) order. Remaining particles
/// keep their order.
pub fn extract_transfers(store: &mut CellSortedStore, species: &SpeciesTable) -> Result<Vec<Transfer>> {
    let nc = store.global_nc();
    let offset = store.cell_offset();
    let mut out = Vec::new();
    let mut keep = Vec::new();
    for (isp, sp) in store.species.iter_mut().enumerate() {
        for (local, cell) in sp.cells.iter_mut().enumerate() {
            if cell.x.iter().all(|x| (0.0..1.0).contains(x)) {
                continue;
            }
            let src = offset + local;
            keep.clear();
            keep.resize(cell.len(), true);
            for i in 0..cell.len() {
                let x = cell.x[i];
                if (0.0..1.0).contains(&x) {
                    continue;
                }
                let (shift, rest) = split_offset(x);
                if shift == 0 {
                    cell.x[i] = rest;
                    continue;
                }
                if shift.unsigned_abs() >= nc as u64 {
                    return Err(PicError::Cfl { species: species.defs[isp].name.clone(), cell: src, shift });
                }
                let dest = (src as i64 + shift).rem_euclid(nc as i64) as usize;
                let mut particle = cell.get(i);
                particle.x = rest;
                out.push(Transfer { species: isp, src, dest, particle });
                keep[i] = false;
            }
            cell.retain_mask(&keep);
        }
    }
    Ok(out)
}

/// Appends arrivals to their destination cells, ordered by source cell and,
/// within a source, by extraction order. The result does not depend on how
/// the transfers were gathered.
pub fn insert_transfers(store: &mut CellSortedStore, mut transfers: Vec<Transfer>) -> Result<usize> {
    let range = store.cell_range();
    if let Some(t) = transfers.iter().find(|t| !range.contains(&t.dest)) {
        return Err(PicError::Contract(format!("transfer to cell {} outside {range:?}", t.dest)));
    }
    transfers.sort_by_key(|t| (t.species, t.dest, t.src));
    let n = transfers.len();
    for t in transfers {
        store.push(t.species, t.dest - range.start, t.particle);
    }
    Ok(n)
}

/// Moves every out-of-cell particle of a whole-grid store to its periodic
/// destination cell. Returns the number of transferred particles.
pub fn resort(store: &mut CellSortedStore, species: &SpeciesTable) -> Result<usize> {
    if store.ncells() != store.global_nc() {
        return Err(PicError::Contract("resort needs a store covering the whole grid".into()));
    }
    let t = extract_transfers(store, species)?;
    insert_transfers(store, t)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MoverTiming {
    pub gather_s: f64,
    pub mover_s: f64,
    /// Push tasks submitted, summed over species.
    pub tasks: usize,
}

/// Gathers the field into `scratch` for every charged species that moves on
/// `step`, parallel over blocks of `grainsize` cells. Returns the task count.
#[allow(clippy::too_many_arguments)]
pub fn gather_phase(
    store: &CellSortedStore,
    e_field: &[f64],
    species: &SpeciesTable,
    grid: &Grid1D,
    step: u64,
    sched: &Scheduler,
    grainsize: usize,
    scratch: &mut ParticleField,
) -> Result<usize> {
    if e_field.len() != grid.nodes() {
        return Err(PicError::Contract("field length does not match grid".into()));
    }
    let offset = store.cell_offset();
    scratch.resize_with(store.nspecies(), Vec::new);
    let mut tasks = 0;
    for (isp, def) in species.defs.iter().enumerate() {
        if !(def.charged && def.moves_on(step)) {
            continue;
        }
        let buf = &mut scratch[isp];
        buf.resize_with(store.ncells(), Vec::new);
        let mut pairs: Vec<(&CellParticles, &mut Vec<f64>)> =
            store.species[isp].cells.iter().zip(buf.iter_mut()).collect();
        tasks += sched.parallel_chunks_mut("gather", &mut pairs, grainsize, |start, chunk| {
            for (k, (cell, out)) in chunk.iter_mut().enumerate() {
                gather_cell(e_field, offset + start + k, cell, out);
            }
        })?;
    }
    Ok(tasks)
}

/// Velocity push from the gathered field in `scratch` and position push for
/// every species that moves on `step`. Neutral species are only drifted.
/// Returns the task count.
#[allow(clippy::too_many_arguments)]
pub fn push_phase(
    store: &mut CellSortedStore,
    scratch: &ParticleField,
    species: &SpeciesTable,
    grid: &Grid1D,
    consts: &PhysicalConstants,
    step: u64,
    sched: &Scheduler,
    grainsize: usize,
) -> Result<usize> {
    let mut tasks = 0;
    for (isp, def) in species.defs.iter().enumerate() {
        if !def.moves_on(step) {
            continue;
        }
        let kick = def.charged.then(|| kick_factor(def, consts, grid.dx_m()));
        let nstep = f64::from(def.nstep);
        let empty: Vec<f64> = Vec::new();
        let mut pairs: Vec<(&mut CellParticles, &Vec<f64>)> = match kick {
            Some(_) => {
                let buf = scratch.get(isp).filter(|b| b.len() == store.ncells()).ok_or_else(|| {
                    PicError::Contract(format!("no gathered field for species `{}`", def.name))
                })?;
                store.species[isp].cells.iter_mut().zip(buf.iter()).collect()
            }
            None => store.species[isp].cells.iter_mut().map(|c| (c, &empty)).collect(),
        };
        tasks += sched.parallel_chunks_mut("mover", &mut pairs, grainsize, |_, chunk| {
            for (cell, ep) in chunk.iter_mut() {
                if let Some(k) = kick {
                    kick_cell(cell, ep, k);
                }
                drift_cell(cell, nstep);
            }
        })?;
    }
    Ok(tasks)
}

/// [`gather_phase`] followed by [`push_phase`], timed separately.
#[allow(clippy::too_many_arguments)]
pub fn mover_phase(
    store: &mut CellSortedStore,
    e_field: &[f64],
    species: &SpeciesTable,
    grid: &Grid1D,
    consts: &PhysicalConstants,
    step: u64,
    sched: &Scheduler,
    grainsize: usize,
    scratch: &mut ParticleField,
) -> Result<MoverTiming> {
    let t0 = Instant::now();
    gather_phase(store, e_field, species, grid, step, sched, grainsize, scratch)?;
    let gather_s = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let tasks = push_phase(store, scratch, species, grid, consts, step, sched, grainsize)?;
    Ok(MoverTiming { gather_s, mover_s: t1.elapsed().as_secs_f64(), tasks })
}
