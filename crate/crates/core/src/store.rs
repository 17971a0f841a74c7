//! Cell-sorted particle storage.
//!
//! Each species keeps one structure-of-arrays bucket per cell, so particles that
//! are spatial neighbours are also adjacent in memory. Positions are cell
//! relative offsets in `[0, 1)` in units of `dx`; velocities are in `dx` per
//! base time step.

use crate::error::{PicError, Result};

/// A single particle record, used when moving particles between buckets or
/// layouts. `yp` is zero for species that do not track it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Particle {
    pub x: f64,
    pub yp: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
}

impl Particle {
    pub fn bits(&self) -> [u64; 5] {
        [self.x.to_bits(), self.yp.to_bits(), self.vx.to_bits(), self.vy.to_bits(), self.vz.to_bits()]
    }
}

/// Particles of one species in one cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellParticles {
    pub x: Vec<f64>,
    /// Empty unless the species tracks the transverse position.
    pub yp: Vec<f64>,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub vz: Vec<f64>,
}

impl CellParticles {
    pub fn with_capacity(cap: usize, track_transverse: bool) -> Self {
        CellParticles {
            x: Vec::with_capacity(cap),
            yp: if track_transverse { Vec::with_capacity(cap) } else { Vec::new() },
            vx: Vec::with_capacity(cap),
            vy: Vec::with_capacity(cap),
            vz: Vec::with_capacity(cap),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.x.capacity()
    }

    /// Makes room for `additional` more particles, doubling the capacity as
    /// often as needed.
    pub fn reserve_doubling(&mut self, additional: usize, track_transverse: bool) {
        let need = self.len() + additional;
        let mut cap = self.capacity().max(1);
        if need <= self.capacity() {
            return;
        }
        while cap < need {
            cap *= 2;
        }
        let extra = cap - self.len();
        self.x.reserve_exact(extra);
        if track_transverse {
            self.yp.reserve_exact(cap - self.yp.len());
        }
        self.vx.reserve_exact(extra);
        self.vy.reserve_exact(extra);
        self.vz.reserve_exact(extra);
    }

    pub fn push(&mut self, p: Particle, track_transverse: bool) {
        self.reserve_doubling(1, track_transverse);
        self.x.push(p.x);
        if track_transverse {
            self.yp.push(p.yp);
        }
        self.vx.push(p.vx);
        self.vy.push(p.vy);
        self.vz.push(p.vz);
    }

    pub fn get(&self, i: usize) -> Particle {
        Particle {
            x: self.x[i],
            yp: self.yp.get(i).copied().unwrap_or(0.0),
            vx: self.vx[i],
            vy: self.vy[i],
            vz: self.vz[i],
        }
    }

    pub fn set(&mut self, i: usize, p: Particle) {
        self.x[i] = p.x;
        if let Some(y) = self.yp.get_mut(i) {
            *y = p.yp;
        }
        self.vx[i] = p.vx;
        self.vy[i] = p.vy;
        self.vz[i] = p.vz;
    }

    pub fn swap_remove(&mut self, i: usize) -> Particle {
        let p = self.get(i);
        self.x.swap_remove(i);
        if !self.yp.is_empty() {
            self.yp.swap_remove(i);
        }
        self.vx.swap_remove(i);
        self.vy.swap_remove(i);
        self.vz.swap_remove(i);
        p
    }

    /// Keeps the particles for which `keep[i]` is true, preserving order.
    pub fn retain_mask(&mut self, keep: &[bool]) {
        fn compact(v: &mut Vec<f64>, keep: &[bool]) {
            let mut w = 0;
            for r in 0..v.len() {
                if keep[r] {
                    v[w] = v[r];
                    w += 1;
                }
            }
            v.truncate(w);
        }
        compact(&mut self.x, keep);
        if !self.yp.is_empty() {
            compact(&mut self.yp, keep);
        }
        compact(&mut self.vx, keep);
        compact(&mut self.vy, keep);
        compact(&mut self.vz, keep);
    }

    pub fn iter(&self) -> impl Iterator<Item = Particle> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }
}

/// All cells of one species.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesCells {
    pub track_transverse: bool,
    pub cells: Vec<CellParticles>,
}

impl SpeciesCells {
    pub fn total(&self) -> u64 {
        self.cells.iter().map(|c| c.len() as u64).sum()
    }
}

/// Per-species, per-cell particle buckets for a contiguous range of global
/// cells `[cell_offset, cell_offset + ncells)` of a periodic grid of
/// `global_nc` cells. A single-domain store has `cell_offset == 0` and
/// `ncells == global_nc`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSortedStore {
    global_nc: usize,
    cell_offset: usize,
    pub species: Vec<SpeciesCells>,
}

impl CellSortedStore {
    /// Empty store covering the whole grid.
    pub fn empty(global_nc: usize, track_transverse: &[bool]) -> Self {
        Self::empty_range(global_nc, 0..global_nc, track_transverse, 0)
    }

    pub fn empty_range(
        global_nc: usize,
        cells: std::ops::Range<usize>,
        track_transverse: &[bool],
        capacity: usize,
    ) -> Self {
        let species = track_transverse
            .iter()
            .map(|&t| SpeciesCells {
                track_transverse: t,
                cells: cells.clone().map(|_| CellParticles::with_capacity(capacity, t)).collect(),
            })
            .collect();
        CellSortedStore { global_nc, cell_offset: cells.start, species }
    }

    pub fn global_nc(&self) -> usize {
        self.global_nc
    }

    pub fn cell_offset(&self) -> usize {
        self.cell_offset
    }

    /// Number of cells held by this store.
    pub fn ncells(&self) -> usize {
        self.species.first().map_or(0, |s| s.cells.len())
    }

    pub fn cell_range(&self) -> std::ops::Range<usize> {
        self.cell_offset..self.cell_offset + self.ncells()
    }

    pub fn nspecies(&self) -> usize {
        self.species.len()
    }

    pub fn np(&self, isp: usize, local_cell: usize) -> usize {
        self.species[isp].cells[local_cell].len()
    }

    pub fn cap(&self, isp: usize, local_cell: usize) -> usize {
        self.species[isp].cells[local_cell].capacity()
    }

    /// Total particle count of species `isp`.
    pub fn store_total(&self, isp: usize) -> u64 {
        self.species[isp].total()
    }

    pub fn totals(&self) -> Vec<u64> {
        self.species.iter().map(|s| s.total()).collect()
    }

    pub fn push(&mut self, isp: usize, local_cell: usize, p: Particle) {
        let s = &mut self.species[isp];
        s.cells[local_cell].push(p, s.track_transverse);
    }

    /// Checks that every stored offset lies in `[0, 1)`.
    pub fn check_sorted(&self) -> Result<()> {
        for (isp, s) in self.species.iter().enumerate() {
            for (j, c) in s.cells.iter().enumerate() {
                if let Some(x) = c.x.iter().find(|x| !(0.0..1.0).contains(*x)) {
                    return Err(PicError::Contract(format!(
                        "species {isp}, cell {}: offset {x} outside [0,1); resort first",
                        j + self.cell_offset
                    )));
                }
            }
        }
        Ok(())
    }
}
