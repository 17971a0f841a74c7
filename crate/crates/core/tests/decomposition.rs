use picmc_core::collisions::{collision_phase, CollisionParams};
use picmc_core::decomposition::{exchange_guard_density, migrate_particles, partition_grid, route_transfers};
use picmc_core::fields::{compute_efield, deposit_charge, deposit_piece, solve_poisson, ParticleField};
use picmc_core::mover::{extract_transfers, mover_phase, resort, Transfer};
use picmc_core::{
    init_plasma, init_plasma_range, CellSortedStore, FieldBoundary, Grid1D, Particle, PicError, RunConfig,
};
use picmc_scheduler::Scheduler;

fn config(nc: usize) -> RunConfig {
    let mut c = RunConfig::desk_scale();
    c.grid = Grid1D::new(nc, nc as f64 * 1e-5).unwrap();
    c.ppc0 = 6;
    c.field_solver = true;
    c
}

fn split(store: &CellSortedStore, nc: usize, workers: usize) -> Vec<CellSortedStore> {
    let part = partition_grid(nc, workers).unwrap();
    part.ranges()
        .iter()
        .map(|r| {
            let track: Vec<bool> = store.species.iter().map(|s| s.track_transverse).collect();
            let mut s = CellSortedStore::empty_range(nc, r.clone(), &track, 0);
            for (isp, sp) in store.species.iter().enumerate() {
                for j in r.clone() {
                    s.species[isp].cells[j - r.start] = sp.cells[j].clone();
                }
            }
            s
        })
        .collect()
}

#[test]
fn stitched_density_matches_single_domain_bitwise() {
    let c = config(37);
    let table = c.species_table();
    let mut whole = init_plasma(&c).unwrap();
    // Particles exactly on worker seams and on the periodic seam.
    whole.push(0, 0, Particle::default());
    whole.push(1, 10, Particle::default());
    whole.push(0, 36, Particle { x: 0.999_999, ..Particle::default() });
    for bc in [FieldBoundary::Periodic, FieldBoundary::Dirichlet { phi_left: 0.0, phi_right: 1.0 }] {
        let reference = deposit_charge(&whole, &c.grid, &table, bc).unwrap();
        for w in [1, 2, 3, 4, 7] {
            let part = partition_grid(37, w).unwrap();
            let pieces: Vec<Vec<f64>> =
                split(&whole, 37, w).iter().map(|s| deposit_piece(s, &table).unwrap()).collect();
            let rho = exchange_guard_density(&pieces, &part, bc).unwrap();
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&rho), bits(&reference), "workers {w}");
        }
    }
}

#[test]
fn single_crossing_shifts_one_particle() {
    let c = config(20);
    let table = c.species_table();
    let part = partition_grid(20, 4).unwrap();
    let sched = Scheduler::new(2).unwrap();
    let mut stores: Vec<CellSortedStore> =
        part.ranges().iter().map(|r| init_plasma_range(&c, r.clone()).unwrap()).collect();
    stores[1].species[0].cells[4].x[0] = 1.5;
    let before: Vec<u64> = stores.iter().map(|s| s.store_total(0)).collect();
    let pending: Vec<Vec<Transfer>> =
        stores.iter_mut().map(|s| extract_transfers(s, &table).unwrap()).collect();
    let t = migrate_particles(&mut stores, pending, &part, &table, &sched).unwrap();
    assert_eq!((t.sent, t.received, t.local), (1, 1, 0));
    let after: Vec<u64> = stores.iter().map(|s| s.store_total(0)).collect();
    assert_eq!(after[1], before[1] - 1);
    assert_eq!(after[2], before[2] + 1);
    assert_eq!(after.iter().sum::<u64>(), before.iter().sum::<u64>());
    assert_eq!(stores[2].species[0].cells[0].x.last(), Some(&0.5));

    let pending = vec![Vec::new(); 4];
    let t = migrate_particles(&mut stores, pending, &part, &table, &sched).unwrap();
    assert_eq!((t.sent, t.received), (0, 0));
    assert_eq!(t.messages, 8);
}

#[test]
fn wrap_across_global_boundary_keeps_velocity() {
    let c = config(12);
    let table = c.species_table();
    let part = partition_grid(12, 3).unwrap();
    let sched = Scheduler::new(3).unwrap();
    let mut stores: Vec<CellSortedStore> =
        part.ranges().iter().map(|r| init_plasma_range(&c, r.clone()).unwrap()).collect();
    stores[0].species[0].cells[0].x[0] = -0.25;
    let v = stores[0].species[0].cells[0].get(0);
    let pending: Vec<Vec<Transfer>> =
        stores.iter_mut().map(|s| extract_transfers(s, &table).unwrap()).collect();
    migrate_particles(&mut stores, pending, &part, &table, &sched).unwrap();
    let arrived = stores[2].species[0].cells[3].get(stores[2].np(0, 3) - 1);
    assert_eq!(arrived, Particle { x: 0.75, ..v });
}

#[test]
fn non_adjacent_destination_rejected() {
    let c = config(20);
    let table = c.species_table();
    let part = partition_grid(20, 4).unwrap();
    let t = Transfer { species: 2, src: 2, dest: 11, particle: Particle::default() };
    match route_transfers(0, vec![t], &part, &table) {
        Err(PicError::NonAdjacentMigration { species, from, to }) => {
            assert_eq!((species.as_str(), from, to), ("D", 0, 2));
        }
        other => panic!("unexpected {other:?}"),
    }
}

/// Full cycle over `workers` subdomains; returns per-step rho bits, totals and
/// the final particle multiset.
fn run(workers: usize, steps: u64) -> (Vec<Vec<u64>>, Vec<Vec<u64>>, Vec<CellSortedStore>) {
    let c = config(48);
    let table = c.species_table();
    let consts = c.constants();
    let params = CollisionParams::from_config(&c).unwrap().unwrap();
    let part = partition_grid(48, workers).unwrap();
    let sched = Scheduler::new(workers).unwrap();
    let mut stores: Vec<CellSortedStore> =
        part.ranges().iter().map(|r| init_plasma_range(&c, r.clone()).unwrap()).collect();
    let mut scratch: Vec<ParticleField> = vec![ParticleField::new(); workers];
    let (mut rhos, mut totals) = (Vec::new(), Vec::new());
    for step in 1..=steps {
        let pieces: Vec<Vec<f64>> = stores.iter().map(|s| deposit_piece(s, &table).unwrap()).collect();
        let rho = exchange_guard_density(&pieces, &part, FieldBoundary::Periodic).unwrap();
        let phi = solve_poisson(&rho, &c.grid, &consts, FieldBoundary::Periodic).unwrap().phi;
        let e = compute_efield(&phi, &c.grid, FieldBoundary::Periodic);
        rhos.push(rho.iter().map(|x| x.to_bits()).collect());
        for s in &mut stores {
            collision_phase(s, &params, step, &sched, 5).unwrap();
        }
        for (s, sc) in stores.iter_mut().zip(&mut scratch) {
            mover_phase(s, &e, &table, &c.grid, &consts, step, &sched, 5, sc).unwrap();
        }
        let pending: Vec<Vec<Transfer>> =
            stores.iter_mut().map(|s| extract_transfers(s, &table).unwrap()).collect();
        let t = migrate_particles(&mut stores, pending, &part, &table, &sched).unwrap();
        assert_eq!(t.sent, t.received);
        let mut tot = vec![0u64; 3];
        for s in &stores {
            for (a, b) in tot.iter_mut().zip(s.totals()) {
                *a += b;
            }
        }
        totals.push(tot);
    }
    (rhos, totals, stores)
}

#[test]
fn decomposed_runs_are_identical() {
    let (rho1, tot1, s1) = run(1, 60);
    // Single-domain reference built from the undecomposed operations.
    {
        let c = config(48);
        let table = c.species_table();
        let mut whole = init_plasma(&c).unwrap();
        let consts = c.constants();
        let params = CollisionParams::from_config(&c).unwrap().unwrap();
        let sched = Scheduler::new(1).unwrap();
        let mut scratch = ParticleField::new();
        for step in 1..=60 {
            let rho = deposit_charge(&whole, &c.grid, &table, FieldBoundary::Periodic).unwrap();
            assert_eq!(rho.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), rho1[step as usize - 1]);
            let phi = solve_poisson(&rho, &c.grid, &consts, FieldBoundary::Periodic).unwrap().phi;
            let e = compute_efield(&phi, &c.grid, FieldBoundary::Periodic);
            collision_phase(&mut whole, &params, step, &sched, 48).unwrap();
            mover_phase(&mut whole, &e, &table, &c.grid, &consts, step, &sched, 48, &mut scratch).unwrap();
            resort(&mut whole, &table).unwrap();
        }
        assert_eq!(whole, s1[0]);
    }
    for w in [2, 3, 4, 8] {
        let (rho, tot, stores) = run(w, 60);
        assert_eq!(rho, rho1, "density, workers {w}");
        assert_eq!(tot, tot1, "totals, workers {w}");
        let mut j = 0;
        for s in &stores {
            for local in 0..s.ncells() {
                for isp in 0..3 {
                    assert_eq!(s.species[isp].cells[local], s1[0].species[isp].cells[j], "cell {j}");
                }
                j += 1;
            }
        }
    }
}
