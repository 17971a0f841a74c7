//! The simulation cycle over a decomposed grid.

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::Path;
use std::time::Instant;

use picmc_core::collisions::{collision_phase, write_tally_csv, CollisionParams, CollisionTally, TallyRow};
use picmc_core::decomposition::{exchange_guard_density, migrate_particles, partition_grid, Partition};
use picmc_core::fields::{compute_efield, deposit_piece, smooth_density, solve_poisson, ParticleField};
use picmc_core::layout::{convert_layout, mover_kernel};
use picmc_core::mover::{extract_transfers, gather_phase, push_phase, Transfer};
use picmc_core::{
    init_plasma_range, CellSortedStore, FieldBoundary, FieldState, LayoutVariant, PicError, Result, RunConfig,
    SpeciesTable,
};
use picmc_scheduler::{write_trace_csv, Scheduler, TraceEvent};

use crate::metrics::{write_metrics_csv, Phase, PhaseTimes, RunDescriptor, RunMetrics};

/// Diagnostics after one step; step 0 describes the initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagRow {
    pub step: u64,
    pub totals: Vec<u64>,
    pub tally: CollisionTally,
    /// FNV-1a hash of the bits of the deposited charge density.
    pub rho_hash: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep every step's charge density in [`RunOutput::density_history`].
    pub record_density: bool,
    /// Record scheduler events into [`RunOutput::trace`].
    pub trace: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub tallies: Vec<TallyRow>,
    pub fields: FieldState,
    pub density_history: Vec<Vec<f64>>,
    pub trace: Vec<TraceEvent>,
    /// Final particles, one store per subdomain.
    pub stores: Vec<CellSortedStore>,
}

pub fn fnv1a_bits(values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Runs `body` once per subdomain as a scheduler task and returns the first
/// error, if any.
fn per_domain<T, F>(sched: &Scheduler, tag: &str, items: &mut [T], body: F) -> Result<()>
where
    T: Send,
    F: Fn(usize, &mut T) -> Result<()> + Sync,
{
    let mut slots: Vec<(&mut T, Option<PicError>)> = items.iter_mut().map(|t| (t, None)).collect();
    sched.parallel_chunks_mut(tag, &mut slots, 1, |w, chunk| {
        let (item, err) = &mut chunk[0];
        if let Err(e) = body(w, item) {
            *err = Some(e);
        }
    })?;
    match slots.into_iter().find_map(|(_, e)| e) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Per-subdomain working buffers; the particles live in a parallel vector of
/// stores so migration can take them as one slice.
#[derive(Default)]
struct Scratch {
    field: ParticleField,
    piece: Vec<f64>,
    pending: Vec<Transfer>,
    tally: CollisionTally,
}

fn pairs<'a>(stores: &'a mut [CellSortedStore], aux: &'a mut [Scratch]) -> Vec<(&'a mut CellSortedStore, &'a mut Scratch)> {
    stores.iter_mut().zip(aux.iter_mut()).collect()
}

struct Cycle {
    species: SpeciesTable,
    partition: Partition,
    collisions: Option<CollisionParams>,
    bc: FieldBoundary,
    sched: Scheduler,
}

impl Cycle {
    fn deposit(&self, stores: &mut [CellSortedStore], aux: &mut [Scratch]) -> Result<Vec<f64>> {
        per_domain(&self.sched, "deposit", &mut pairs(stores, aux), |_, (s, a)| {
            a.piece = deposit_piece(s, &self.species)?;
            Ok(())
        })?;
        let pieces: Vec<Vec<f64>> = aux.iter_mut().map(|a| std::mem::take(&mut a.piece)).collect();
        exchange_guard_density(&pieces, &self.partition, self.bc)
    }

    fn totals(&self, stores: &[CellSortedStore]) -> Vec<u64> {
        let mut t = vec![0u64; self.species.len()];
        for s in stores {
            for (a, b) in t.iter_mut().zip(s.totals()) {
                *a += b;
            }
        }
        t
    }
}

/// Runs the configured scenario with default options and writes the CSV
/// outputs when `config.output_dir` is set.
pub fn run_simulation(config: &RunConfig) -> Result<RunMetrics> {
    let out = run_simulation_with(config, RunOptions { record_density: false, trace: true })?;
    if let Some(dir) = &config.output_dir {
        write_outputs(&out, config, dir)?;
    }
    Ok(out.metrics)
}

/// One pass of deposit, smooth, solve, collide, gather, move, resort and
/// migrate per step. With `field_solver` off the smoother and the Poisson
/// solve are skipped and the field stays zero.
pub fn run_simulation_with(config: &RunConfig, options: RunOptions) -> Result<RunOutput> {
    config.validate()?;
    let nc = config.grid.nc();
    let sched = Scheduler::new(config.workers)?;
    sched.set_tracing(options.trace);
    let cycle = Cycle {
        species: config.species_table(),
        partition: partition_grid(nc, config.workers)?,
        collisions: CollisionParams::from_config(config)?,
        bc: FieldBoundary::Periodic,
        sched,
    };
    let consts = config.constants();
    let grid = config.grid;
    let grain = config.grainsize;

    let mut stores: Vec<CellSortedStore> = cycle
        .partition
        .ranges()
        .iter()
        .map(|r| init_plasma_range(config, r.clone()))
        .collect::<Result<_>>()?;
    let mut aux: Vec<Scratch> = (0..config.workers).map(|_| Scratch::default()).collect();

    let mut phases = PhaseTimes::default();
    let mut fields = FieldState::zeros(&grid);
    let rho0 = cycle.deposit(&mut stores, &mut aux).map_err(|e| e.in_phase("deposit", 0))?;
    let neutral_index = cycle.collisions.as_ref().map(|p| p.neutral);
    let mut diagnostics = vec![DiagRow {
        step: 0,
        totals: cycle.totals(&stores),
        tally: CollisionTally::default(),
        rho_hash: fnv1a_bits(&rho0),
    }];
    fields.rho = rho0;
    let mut tallies = Vec::new();
    let mut density_history = Vec::new();
    let layout = config.layout;

    let total_start = Instant::now();
    for step in 1..=config.n_steps {
        let t = Instant::now();
        let rho = cycle.deposit(&mut stores, &mut aux).map_err(|e| e.in_phase("deposit", step))?;
        phases.add(Phase::Deposit, t.elapsed().as_secs_f64());

        if config.field_solver {
            let t = Instant::now();
            let smoothed = smooth_density(&rho, config.smoothing_passes);
            phases.add(Phase::Smooth, t.elapsed().as_secs_f64());

            let t = Instant::now();
            let sol = solve_poisson(&smoothed, &grid, &consts, cycle.bc).map_err(|e| e.in_phase("solve", step))?;
            fields.e_field = compute_efield(&sol.phi, &grid, cycle.bc);
            fields.phi = sol.phi;
            fields.removed_mean_rho = sol.removed_mean_rho;
            phases.add(Phase::Solve, t.elapsed().as_secs_f64());
        }
        let rho_hash = fnv1a_bits(&rho);
        if options.record_density {
            density_history.push(rho.clone());
        }
        fields.rho = rho;

        let mut tally = CollisionTally::default();
        if let Some(params) = &cycle.collisions {
            let t = Instant::now();
            per_domain(&cycle.sched, "collide", &mut pairs(&mut stores, &mut aux), |_, (s, a)| {
                a.tally = collision_phase(s, params, step, &cycle.sched, grain)?;
                Ok(())
            })
            .map_err(|e| e.in_phase("collide", step))?;
            phases.add(Phase::Collide, t.elapsed().as_secs_f64());
            for a in &aux {
                tally += a.tally;
            }
        }

        let e_field = &fields.e_field;
        if layout == LayoutVariant::CellSorted {
            let t = Instant::now();
            per_domain(&cycle.sched, "gather", &mut pairs(&mut stores, &mut aux), |_, (s, a)| {
                gather_phase(s, e_field, &cycle.species, &grid, step, &cycle.sched, grain, &mut a.field)?;
                Ok(())
            })
            .map_err(|e| e.in_phase("gather", step))?;
            phases.add(Phase::Gather, t.elapsed().as_secs_f64());

            let t = Instant::now();
            per_domain(&cycle.sched, "push", &mut pairs(&mut stores, &mut aux), |_, (s, a)| {
                push_phase(s, &a.field, &cycle.species, &grid, &consts, step, &cycle.sched, grain)?;
                Ok(())
            })
            .map_err(|e| e.in_phase("mover", step))?;
            phases.add(Phase::Mover, t.elapsed().as_secs_f64());
        } else {
            // Fused gather and push on the alternative layout; conversion in
            // and out is part of the mover time.
            let t = Instant::now();
            per_domain(&cycle.sched, "fused_mover", &mut stores, |_, s| {
                let mut alt = convert_layout(s, layout)?;
                mover_kernel(&mut alt, e_field, &cycle.species, &grid, &consts, step);
                *s = alt.to_cell_sorted();
                Ok(())
            })
            .map_err(|e| e.in_phase("mover", step))?;
            phases.add(Phase::Mover, t.elapsed().as_secs_f64());
        }

        let t = Instant::now();
        per_domain(&cycle.sched, "resort", &mut pairs(&mut stores, &mut aux), |_, (s, a)| {
            a.pending = extract_transfers(s, &cycle.species)?;
            Ok(())
        })
        .map_err(|e| e.in_phase("resort", step))?;
        phases.add(Phase::Resort, t.elapsed().as_secs_f64());

        let t = Instant::now();
        let pending: Vec<Vec<Transfer>> = aux.iter_mut().map(|a| std::mem::take(&mut a.pending)).collect();
        migrate_particles(&mut stores, pending, &cycle.partition, &cycle.species, &cycle.sched)
            .map_err(|e| e.in_phase("migrate", step))?;
        phases.add(Phase::Migrate, t.elapsed().as_secs_f64());

        let totals = cycle.totals(&stores);
        if let Some(n) = neutral_index {
            tallies.push(TallyRow { step, tally, n_neutral_total: totals[n] });
        }
        diagnostics.push(DiagRow { step, totals, tally, rho_hash });
    }
    if config.n_steps > 0 {
        phases.set(Phase::Total, total_start.elapsed().as_secs_f64());
    }

    let trace = cycle.sched.take_trace();
    let descriptor = RunDescriptor {
        config_hash: config.fingerprint(),
        workers: config.workers,
        layout,
        nc,
        n_steps: config.n_steps,
        seed: config.seed,
    };
    Ok(RunOutput {
        metrics: RunMetrics { phases, diagnostics, descriptor },
        tallies,
        fields,
        density_history,
        trace,
        stores,
    })
}

/// Writes `step, n_<species>..., elastic, excitation, ionization, suppressed,
/// rho_fnv`.
pub fn write_diagnostics_csv<W: io::Write>(rows: &[DiagRow], species: &[String], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["step".to_string()];
    header.extend(species.iter().map(|s| format!("n_{s}")));
    header.extend(["elastic", "excitation", "ionization", "suppressed", "rho_fnv"].map(String::from));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.step.to_string()];
        rec.extend(r.totals.iter().map(|t| t.to_string()));
        rec.extend([r.tally.elastic, r.tally.excitation, r.tally.ionization, r.tally.suppressed].map(|v| v.to_string()));
        rec.push(format!("{:016x}", r.rho_hash));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// diagnostics.csv, collisions.csv, fields.csv, metrics.csv and trace.csv.
pub fn write_outputs(out: &RunOutput, config: &RunConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let file = |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };
    let names: Vec<String> = config.species.iter().map(|d| d.name.clone()).collect();
    write_diagnostics_csv(&out.metrics.diagnostics, &names, file("diagnostics.csv")?)?;
    write_tally_csv(&out.tallies, file("collisions.csv")?)?;
    out.fields.write_csv(&config.grid, file("fields.csv")?)?;
    write_metrics_csv(&out.metrics.phases, file("metrics.csv")?)?;
    write_trace_csv(&out.trace, file("trace.csv")?)?;
    Ok(())
}
