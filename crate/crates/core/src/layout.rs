//! Alternative particle layouts for the mover: vector of per-particle structs
//! tagged with their cell, and one cell-major array of structs per species.

use std::fmt;
use std::io;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{PicError, Result};
use crate::grid::Grid1D;
use crate::mover::{advance_cell, kick_factor, resort, split_offset};
use crate::rng::{stream, StreamKind};
use crate::species::{SpeciesDef, SpeciesTable};
use crate::store::{CellSortedStore, Particle};
use crate::fields::interpolate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutVariant {
    #[default]
    CellSorted,
    VectorOfStructs,
    ArrayOfStructs,
}

impl LayoutVariant {
    pub const ALL: [LayoutVariant; 3] =
        [LayoutVariant::CellSorted, LayoutVariant::VectorOfStructs, LayoutVariant::ArrayOfStructs];

    pub fn name(self) -> &'static str {
        match self {
            LayoutVariant::CellSorted => "cell_sorted",
            LayoutVariant::VectorOfStructs => "vector_of_structs",
            LayoutVariant::ArrayOfStructs => "array_of_structs",
        }
    }
}

impl fmt::Display for LayoutVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LayoutVariant {
    type Err = PicError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cell_sorted" => Ok(LayoutVariant::CellSorted),
            "vector_of_structs" | "vos" => Ok(LayoutVariant::VectorOfStructs),
            "array_of_structs" | "aos" => Ok(LayoutVariant::ArrayOfStructs),
            _ => Err(PicError::InvalidConfig(format!("unknown layout `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggedParticle {
    /// Global cell index.
    pub cell: usize,
    pub p: Particle,
}

/// Every particle of a species in one vector, each tagged with its cell.
#[derive(Debug, Clone, PartialEq)]
pub struct VosStore {
    pub global_nc: usize,
    pub cell_offset: usize,
    pub ncells: usize,
    pub track_transverse: Vec<bool>,
    pub species: Vec<Vec<TaggedParticle>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AosSpecies {
    /// Particles of cell `j` are `particles[offsets[j]..offsets[j + 1]]`.
    pub particles: Vec<Particle>,
    pub offsets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AosStore {
    pub global_nc: usize,
    pub cell_offset: usize,
    pub ncells: usize,
    pub track_transverse: Vec<bool>,
    pub species: Vec<AosSpecies>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayoutStore {
    CellSorted(CellSortedStore),
    Vos(VosStore),
    Aos(AosStore),
}

/// Lossless conversion; particles keep their cell-major order. Works on
/// subdomain stores as well as whole-grid ones.
pub fn convert_layout(store: &CellSortedStore, target: LayoutVariant) -> Result<LayoutStore> {
    let nc = store.global_nc();
    let off = store.cell_offset();
    let ncells = store.ncells();
    let track: Vec<bool> = store.species.iter().map(|s| s.track_transverse).collect();
    Ok(match target {
        LayoutVariant::CellSorted => LayoutStore::CellSorted(store.clone()),
        LayoutVariant::VectorOfStructs => LayoutStore::Vos(VosStore {
            global_nc: nc,
            cell_offset: off,
            ncells,
            track_transverse: track,
            species: store
                .species
                .iter()
                .map(|s| {
                    s.cells
                        .iter()
                        .enumerate()
                        .flat_map(|(j, c)| c.iter().map(move |p| TaggedParticle { cell: off + j, p }))
                        .collect()
                })
                .collect(),
        }),
        LayoutVariant::ArrayOfStructs => LayoutStore::Aos(AosStore {
            global_nc: nc,
            cell_offset: off,
            ncells,
            track_transverse: track,
            species: store
                .species
                .iter()
                .map(|s| {
                    let mut offsets = Vec::with_capacity(ncells + 1);
                    let mut particles = Vec::with_capacity(s.total() as usize);
                    offsets.push(0);
                    for c in &s.cells {
                        particles.extend(c.iter());
                        offsets.push(particles.len());
                    }
                    AosSpecies { particles, offsets }
                })
                .collect(),
        }),
    })
}

impl LayoutStore {
    pub fn variant(&self) -> LayoutVariant {
        match self {
            LayoutStore::CellSorted(_) => LayoutVariant::CellSorted,
            LayoutStore::Vos(_) => LayoutVariant::VectorOfStructs,
            LayoutStore::Aos(_) => LayoutVariant::ArrayOfStructs,
        }
    }

    /// Back to cell-sorted buckets. Particles of a cell keep their relative
    /// order, so this inverts [`convert_layout`] exactly.
    pub fn to_cell_sorted(&self) -> CellSortedStore {
        match self {
            LayoutStore::CellSorted(s) => s.clone(),
            LayoutStore::Vos(v) => {
                let range = v.cell_offset..v.cell_offset + v.ncells;
                let mut out = CellSortedStore::empty_range(v.global_nc, range, &v.track_transverse, 0);
                for (isp, parts) in v.species.iter().enumerate() {
                    for t in parts {
                        out.push(isp, t.cell - v.cell_offset, t.p);
                    }
                }
                out
            }
            LayoutStore::Aos(a) => {
                let range = a.cell_offset..a.cell_offset + a.ncells;
                let mut out = CellSortedStore::empty_range(a.global_nc, range, &a.track_transverse, 0);
                for (isp, s) in a.species.iter().enumerate() {
                    for j in 0..a.ncells {
                        for p in &s.particles[s.offsets[j]..s.offsets[j + 1]] {
                            out.push(isp, j, *p);
                        }
                    }
                }
                out
            }
        }
    }

    pub fn totals(&self) -> Vec<u64> {
        match self {
            LayoutStore::CellSorted(s) => s.totals(),
            LayoutStore::Vos(v) => v.species.iter().map(|s| s.len() as u64).collect(),
            LayoutStore::Aos(a) => a.species.iter().map(|s| s.particles.len() as u64).collect(),
        }
    }

    /// Per species, the sorted multiset of (cell, particle bits).
    pub fn canonical(&self) -> Vec<Vec<(usize, [u64; 5])>> {
        let cs = self.to_cell_sorted();
        cs.species
            .iter()
            .map(|s| {
                let mut v: Vec<(usize, [u64; 5])> = s
                    .cells
                    .iter()
                    .enumerate()
                    .flat_map(|(j, c)| c.iter().map(move |p| (j, p.bits())))
                    .collect();
                v.sort_unstable();
                v
            })
            .collect()
    }
}

/// Gather, velocity push and position push fused into one pass, written once
/// per layout with the same arithmetic.
pub fn mover_kernel(
    store: &mut LayoutStore,
    e_field: &[f64],
    species: &SpeciesTable,
    grid: &Grid1D,
    consts: &PhysicalConstants,
    step: u64,
) {
    for (isp, def) in species.defs.iter().enumerate() {
        if !def.moves_on(step) {
            continue;
        }
        let kick = def.charged.then(|| kick_factor(def, consts, grid.dx_m()));
        let nstep = f64::from(def.nstep);
        match store {
            LayoutStore::CellSorted(s) => {
                let off = s.cell_offset();
                for (j, cell) in s.species[isp].cells.iter_mut().enumerate() {
                    advance_cell(cell, e_field, off + j, kick, nstep);
                }
            }
            LayoutStore::Vos(v) => {
                let track = v.track_transverse[isp];
                for t in &mut v.species[isp] {
                    push_one(&mut t.p, e_field, t.cell, kick, nstep, track);
                }
            }
            LayoutStore::Aos(a) => {
                let track = a.track_transverse[isp];
                let s = &mut a.species[isp];
                for j in 0..a.ncells {
                    for p in &mut s.particles[s.offsets[j]..s.offsets[j + 1]] {
                        push_one(p, e_field, a.cell_offset + j, kick, nstep, track);
                    }
                }
            }
        }
    }
}

#[inline(always)]
fn push_one(p: &mut Particle, e: &[f64], node: usize, kick: Option<f64>, nstep: f64, track: bool) {
    if let Some(k) = kick {
        p.vx += interpolate(e, node, p.x) * k;
    }
    p.x += nstep * p.vx;
    if track {
        p.yp += nstep * p.vy;
    }
}

fn cfl(def: &SpeciesDef, cell: usize, shift: i64) -> PicError {
    PicError::Cfl { species: def.name.clone(), cell, shift }
}

fn destination(x: f64, cell: usize, nc: usize, def: &SpeciesDef) -> Result<(usize, f64)> {
    if (0.0..1.0).contains(&x) {
        return Ok((cell, x));
    }
    let (shift, rest) = split_offset(x);
    if shift.unsigned_abs() >= nc as u64 {
        return Err(cfl(def, cell, shift));
    }
    Ok(((cell as i64 + shift).rem_euclid(nc as i64) as usize, rest))
}

/// Each layout's own cell-transfer step: bucket moves for the cell-sorted
/// store, in-place cell tags for the vector of structs, and a stable counting
/// sort for the array of structs. Returns the number of cell changes.
pub fn native_resort(store: &mut LayoutStore, species: &SpeciesTable) -> Result<usize> {
    let whole = match store {
        LayoutStore::CellSorted(s) => s.ncells() == s.global_nc(),
        LayoutStore::Vos(v) => v.ncells == v.global_nc,
        LayoutStore::Aos(a) => a.ncells == a.global_nc,
    };
    if !whole {
        return Err(PicError::Contract("native resort needs a whole-grid layout".into()));
    }
    match store {
        LayoutStore::CellSorted(s) => resort(s, species),
        LayoutStore::Vos(v) => {
            let nc = v.global_nc;
            let mut moved = 0;
            for (isp, parts) in v.species.iter_mut().enumerate() {
                for t in parts {
                    let (cell, x) = destination(t.p.x, t.cell, nc, &species.defs[isp])?;
                    moved += usize::from(cell != t.cell);
                    t.cell = cell;
                    t.p.x = x;
                }
            }
            Ok(moved)
        }
        LayoutStore::Aos(a) => {
            let nc = a.global_nc;
            let mut moved = 0;
            for (isp, s) in a.species.iter_mut().enumerate() {
                let mut dest = Vec::with_capacity(s.particles.len());
                for j in 0..nc {
                    for p in &mut s.particles[s.offsets[j]..s.offsets[j + 1]] {
                        let (cell, x) = destination(p.x, j, nc, &species.defs[isp])?;
                        moved += usize::from(cell != j);
                        p.x = x;
                        dest.push(cell);
                    }
                }
                let mut counts = vec![0usize; nc + 1];
                for &d in &dest {
                    counts[d + 1] += 1;
                }
                for j in 0..nc {
                    counts[j + 1] += counts[j];
                }
                s.offsets.copy_from_slice(&counts);
                let mut sorted = vec![Particle::default(); s.particles.len()];
                for (p, &d) in s.particles.iter().zip(&dest) {
                    sorted[counts[d]] = *p;
                    counts[d] += 1;
                }
                s.particles = sorted;
            }
            Ok(moved)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpcScenario {
    Uniform,
    /// 90% of the particles in the first 10% of the cells.
    Skewed,
}

impl PpcScenario {
    pub fn name(self) -> &'static str {
        match self {
            PpcScenario::Uniform => "uniform",
            PpcScenario::Skewed => "skewed",
        }
    }

    /// Particle count per cell for a mean of `ppc` per cell.
    pub fn counts(self, nc: usize, ppc: usize) -> Vec<usize> {
        match self {
            PpcScenario::Uniform => vec![ppc; nc],
            PpcScenario::Skewed => {
                let total = nc * ppc;
                let dense = (nc / 10).max(1);
                let sparse = nc - dense;
                let hot = total * 9 / 10;
                let cold = total - hot;
                (0..nc)
                    .map(|j| {
                        if j < dense {
                            hot / dense + usize::from(j < hot % dense)
                        } else {
                            let k = j - dense;
                            cold / sparse + usize::from(k < cold % sparse)
                        }
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutBenchConfig {
    pub nc: usize,
    pub ppc: usize,
    pub steps: u64,
    pub seed: u64,
    pub scenarios: Vec<PpcScenario>,
}

impl Default for LayoutBenchConfig {
    fn default() -> Self {
        LayoutBenchConfig {
            nc: 1000,
            ppc: 100,
            steps: 20,
            seed: 1,
            scenarios: vec![PpcScenario::Uniform, PpcScenario::Skewed],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutBenchRow {
    pub layout: LayoutVariant,
    pub scenario: &'static str,
    pub ppc_total: u64,
    pub ns_per_particle_median: f64,
    pub ns_per_particle_iqr: f64,
}

/// Single charged species with random offsets and slow velocities.
pub fn bench_store(nc: usize, counts: &[usize], seed: u64) -> CellSortedStore {
    let mut s = CellSortedStore::empty(nc, &[false]);
    for (j, &n) in counts.iter().enumerate() {
        let mut rng = stream(seed, StreamKind::Bench, 0, j, 0);
        for _ in 0..n {
            let p = Particle {
                x: rng.random(),
                yp: 0.0,
                vx: rng.random_range(-0.4..0.4),
                vy: rng.random_range(-0.4..0.4),
                vz: rng.random_range(-0.4..0.4),
            };
            s.push(0, j, p);
        }
    }
    s
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Times the fused kernel plus native resort of every layout and scenario.
/// Each repetition starts from the same particles after one untimed warm-up.
pub fn bench_layouts(config: &LayoutBenchConfig, repetitions: usize) -> Result<Vec<LayoutBenchRow>> {
    if repetitions < 3 {
        return Err(PicError::InvalidConfig("at least 3 repetitions required".into()));
    }
    let grid = Grid1D::new(config.nc, config.nc as f64 * 1e-5)?;
    let consts = PhysicalConstants::new(crate::constants::EPSILON_0, 1e-14)?;
    let def = SpeciesDef::new("bench", 1.0e-19, 1.0e-27);
    let species = SpeciesTable::new(vec![def], vec![1.0])?;
    let e: Vec<f64> = (0..grid.nodes())
        .map(|j| (std::f64::consts::TAU * j as f64 / config.nc as f64).sin())
        .collect();

    let mut rows = Vec::new();
    for &scenario in &config.scenarios {
        let counts = scenario.counts(config.nc, config.ppc);
        let base = bench_store(config.nc, &counts, config.seed);
        let total = base.store_total(0);
        for layout in LayoutVariant::ALL {
            let start = convert_layout(&base, layout)?;
            let run = |store: &mut LayoutStore| -> Result<f64> {
                let t = Instant::now();
                for step in 1..=config.steps {
                    mover_kernel(store, &e, &species, &grid, &consts, step);
                    native_resort(store, &species)?;
                }
                Ok(t.elapsed().as_nanos() as f64)
            };
            run(&mut start.clone())?;
            let mut samples = Vec::with_capacity(repetitions);
            for _ in 0..repetitions {
                let ns = run(&mut start.clone())?;
                samples.push(ns / (total.max(1) as f64 * config.steps.max(1) as f64));
            }
            samples.sort_by(f64::total_cmp);
            rows.push(LayoutBenchRow {
                layout,
                scenario: scenario.name(),
                ppc_total: total,
                ns_per_particle_median: quantile(&samples, 0.5),
                ns_per_particle_iqr: quantile(&samples, 0.75) - quantile(&samples, 0.25),
            });
        }
    }
    Ok(rows)
}

/// Writes `layout,scenario,ppc_total,ns_per_particle_median,ns_per_particle_iqr`.
pub fn write_layout_csv<W: io::Write>(rows: &[LayoutBenchRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["layout", "scenario", "ppc_total", "ns_per_particle_median", "ns_per_particle_iqr"])?;
    for r in rows {
        w.write_record([
            r.layout.name().to_string(),
            r.scenario.to_string(),
            r.ppc_total.to_string(),
            format!("{:.4}", r.ns_per_particle_median),
            format!("{:.4}", r.ns_per_particle_iqr),
        ])?;
    }
    w.flush()?;
    Ok(())
}
