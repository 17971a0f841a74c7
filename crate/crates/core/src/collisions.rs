//! Monte Carlo electron-neutral collisions: elastic scattering, excitation and
//! ionization with constant rate coefficients.

use std::io;
use std::ops::{Add, AddAssign};
use std::sync::Mutex;

use picmc_scheduler::Scheduler;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::constants::EV_TO_J;
use crate::error::{PicError, Result};
use crate::rng::{stream, CellRng, StreamKind};
use crate::store::{CellParticles, CellSortedStore, Particle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionRates {
    pub rate_ionization_m3s: f64,
    pub rate_elastic_m3s: f64,
    pub rate_excitation_m3s: f64,
    pub excitation_threshold_ev: f64,
    /// Energy spent per ionization before the remainder is shared.
    #[serde(default)]
    pub ionization_threshold_ev: f64,
}

impl CollisionRates {
    pub fn zero() -> Self {
        CollisionRates {
            rate_ionization_m3s: 0.0,
            rate_elastic_m3s: 0.0,
            rate_excitation_m3s: 0.0,
            excitation_threshold_ev: 0.0,
            ionization_threshold_ev: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.rate_ionization_m3s,
            self.rate_elastic_m3s,
            self.rate_excitation_m3s,
            self.excitation_threshold_ev,
            self.ionization_threshold_ev,
        ];
        if all.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(PicError::InvalidConfig("collision rates and thresholds must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CollisionTally {
    pub elastic: u64,
    pub excitation: u64,
    pub ionization: u64,
    /// Ionizations drawn in a cell that had no neutral left.
    pub suppressed: u64,
}

impl Add for CollisionTally {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        CollisionTally {
            elastic: self.elastic + o.elastic,
            excitation: self.excitation + o.excitation,
            ionization: self.ionization + o.ionization,
            suppressed: self.suppressed + o.suppressed,
        }
    }
}

impl AddAssign for CollisionTally {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// `1 - exp(-n R dt)` for each process, in the order elastic, excitation,
/// ionization.
pub fn process_probabilities(n_target_m3: f64, rates: &CollisionRates, dt_s: f64) -> [f64; 3] {
    [rates.rate_elastic_m3s, rates.rate_excitation_m3s, rates.rate_ionization_m3s]
        .map(|r| -(-n_target_m3 * r * dt_s).exp_m1())
}

/// Number of equal sub-steps (a power of two) and the per-sub-step
/// probabilities, chosen so the probabilities sum below 0.1.
pub fn split_step(n_target_m3: f64, rates: &CollisionRates, dt_s: f64) -> (u32, [f64; 3]) {
    let mut sub = 1u32;
    loop {
        let p = process_probabilities(n_target_m3, rates, dt_s / f64::from(sub));
        if p.iter().sum::<f64>() < 0.1 || sub >= 1 << 20 {
            return (sub, p);
        }
        sub *= 2;
    }
}

/// Everything a cell needs to collide its electrons.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionParams {
    pub electron: usize,
    pub ion: usize,
    pub neutral: usize,
    pub rates: CollisionRates,
    pub dt_s: f64,
    /// Real neutral density represented by one macro-particle in a cell.
    pub neutral_density_per_macro: f64,
    pub electron_mass_kg: f64,
    /// Grid velocity unit in m/s (`dx / dt`).
    pub velocity_unit: f64,
    pub seed: u64,
    pub track_electron: bool,
    pub track_ion: bool,
}

impl CollisionParams {
    /// `None` when the configuration has no enabled collision block.
    pub fn from_config(config: &RunConfig) -> Result<Option<Self>> {
        let Some(c) = config.collisions.as_ref().filter(|c| c.enabled) else {
            return Ok(None);
        };
        let idx = |n: &str| {
            config
                .species
                .iter()
                .position(|d| d.name == n)
                .ok_or_else(|| PicError::InvalidConfig(format!("collision species `{n}` not defined")))
        };
        let (electron, ion, neutral) = (idx(&c.electron)?, idx(&c.ion)?, idx(&c.neutral)?);
        Ok(Some(CollisionParams {
            electron,
            ion,
            neutral,
            rates: c.rates,
            dt_s: config.dt_s,
            neutral_density_per_macro: config.densities_m3[neutral] / config.ppc0 as f64,
            electron_mass_kg: config.species[electron].mass_kg,
            velocity_unit: config.grid.dx_m() / config.dt_s,
            seed: config.seed,
            track_electron: config.species[electron].track_transverse,
            track_ion: config.species[ion].track_transverse,
        }))
    }
}

fn isotropic(rng: &mut CellRng) -> [f64; 3] {
    let cos_t: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    [sin_t * phi.cos(), sin_t * phi.sin(), cos_t]
}

fn set_velocity(cell: &mut CellParticles, i: usize, speed: f64, dir: [f64; 3]) {
    cell.vx[i] = speed * dir[0];
    cell.vy[i] = speed * dir[1];
    cell.vz[i] = speed * dir[2];
}

fn speed(cell: &CellParticles, i: usize) -> f64 {
    (cell.vx[i] * cell.vx[i] + cell.vy[i] * cell.vy[i] + cell.vz[i] * cell.vz[i]).sqrt()
}

/// Collides the electrons present on entry with the neutrals of one cell.
/// Electrons created here do not collide until the next call.
pub fn collide_cell(
    electrons: &mut CellParticles,
    ions: &mut CellParticles,
    neutrals: &mut CellParticles,
    params: &CollisionParams,
    rng: &mut CellRng,
) -> CollisionTally {
    let mut tally = CollisionTally::default();
    let incident = electrons.len();
    if incident == 0 {
        return tally;
    }
    let half_m = 0.5 * params.electron_mass_kg;
    let u2 = params.velocity_unit * params.velocity_unit;
    let energy_j = |v_grid: f64| half_m * v_grid * v_grid * u2;
    let speed_grid = |e_j: f64| (e_j / half_m).sqrt() / params.velocity_unit;

    let density = neutrals.len() as f64 * params.neutral_density_per_macro;
    let (nsub, _) = split_step(density, &params.rates, params.dt_s);
    let dt_sub = params.dt_s / f64::from(nsub);
    for _ in 0..nsub {
        let density = neutrals.len() as f64 * params.neutral_density_per_macro;
        let [p_el, p_ex, p_ion] = process_probabilities(density, &params.rates, dt_sub);
        if p_el + p_ex + p_ion == 0.0 {
            continue;
        }
        for i in 0..incident {
            let u: f64 = rng.random();
            if u < p_el {
                let s = speed(electrons, i);
                let dir = isotropic(rng);
                set_velocity(electrons, i, s, dir);
                tally.elastic += 1;
            } else if u < p_el + p_ex {
                let e = energy_j(speed(electrons, i));
                let left = (e - params.rates.excitation_threshold_ev * EV_TO_J).max(0.0);
                let dir = isotropic(rng);
                set_velocity(electrons, i, speed_grid(left), dir);
                tally.excitation += 1;
            } else if u < p_el + p_ex + p_ion {
                if neutrals.is_empty() {
                    tally.suppressed += 1;
                    continue;
                }
                let k = rng.random_range(0..neutrals.len());
                let atom = neutrals.swap_remove(k);
                ions.push(atom, params.track_ion);

                let e = energy_j(speed(electrons, i));
                let share = 0.5 * (e - params.rates.ionization_threshold_ev * EV_TO_J).max(0.0);
                let s = speed_grid(share);
                let dir_a = isotropic(rng);
                let dir_b = isotropic(rng);
                set_velocity(electrons, i, s, dir_a);
                let born = Particle {
                    x: electrons.x[i],
                    yp: electrons.yp.get(i).copied().unwrap_or(0.0),
                    vx: s * dir_b[0],
                    vy: s * dir_b[1],
                    vz: s * dir_b[2],
                };
                electrons.push(born, params.track_electron);
                tally.ionization += 1;
            }
        }
    }
    tally
}

/// Collides every cell of `store` in parallel over blocks of `grainsize`
/// cells. Each cell draws from its own stream for `step`.
pub fn collision_phase(
    store: &mut CellSortedStore,
    params: &CollisionParams,
    step: u64,
    sched: &Scheduler,
    grainsize: usize,
) -> Result<CollisionTally> {
    let offset = store.cell_offset();
    let [e, i, n] = store
        .species
        .get_disjoint_mut([params.electron, params.ion, params.neutral])
        .map_err(|_| PicError::Contract("collision species must be distinct and present".into()))?;
    let mut cells: Vec<_> = e
        .cells
        .iter_mut()
        .zip(i.cells.iter_mut())
        .zip(n.cells.iter_mut())
        .map(|((a, b), c)| (a, b, c))
        .collect();
    let total = Mutex::new(CollisionTally::default());
    sched.parallel_chunks_mut("collide", &mut cells, grainsize, |start, chunk| {
        let mut t = CollisionTally::default();
        for (k, (e, i, n)) in chunk.iter_mut().enumerate() {
            let mut rng = stream(params.seed, StreamKind::Collision, 0, offset + start + k, step);
            t += collide_cell(e, i, n, params, &mut rng);
        }
        *total.lock().unwrap_or_else(|p| p.into_inner()) += t;
    })?;
    Ok(total.into_inner().unwrap_or_else(|p| p.into_inner()))
}

/// One row of the per-step collision report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TallyRow {
    pub step: u64,
    pub tally: CollisionTally,
    pub n_neutral_total: u64,
}

/// Writes `step,elastic,excitation,ionization,suppressed,n_neutral_total`.
pub fn write_tally_csv<W: io::Write>(rows: &[TallyRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["step", "elastic", "excitation", "ionization", "suppressed", "n_neutral_total"])?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            r.tally.elastic.to_string(),
            r.tally.excitation.to_string(),
            r.tally.ionization.to_string(),
            r.tally.suppressed.to_string(),
            r.n_neutral_total.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ELECTRON_MASS;

    fn params(rates: CollisionRates) -> CollisionParams {
        CollisionParams {
            electron: 0,
            ion: 1,
            neutral: 2,
            rates,
            dt_s: 1.0,
            neutral_density_per_macro: 1.0,
            electron_mass_kg: ELECTRON_MASS,
            velocity_unit: 1.0e6,
            seed: 5,
            track_electron: false,
            track_ion: false,
        }
    }

    fn filled(n: usize, v: f64) -> CellParticles {
        let mut c = CellParticles::default();
        for k in 0..n {
            c.push(Particle { x: k as f64 / n as f64, yp: 0.0, vx: v, vy: -0.5 * v, vz: 0.25 * v }, false);
        }
        c
    }

    fn rng() -> CellRng {
        stream(1, StreamKind::Collision, 0, 0, 1)
    }

    #[test]
    fn probability_series() {
        let r = CollisionRates { rate_ionization_m3s: 1e-3, ..CollisionRates::zero() };
        let p = process_probabilities(1.0, &r, 1.0);
        assert_eq!(p[0], 0.0);
        // x - x^2/2 + x^3/6 - x^4/24 at x = 1e-3
        let x: f64 = 1e-3;
        let series = x - x.powi(2) / 2.0 + x.powi(3) / 6.0 - x.powi(4) / 24.0;
        assert!((p[2] - series).abs() < 1e-15);
        assert!((p[2] - 9.995e-4).abs() < 5e-8);
    }

    #[test]
    fn large_probabilities_split_the_step() {
        let r = CollisionRates { rate_elastic_m3s: 1.0, ..CollisionRates::zero() };
        let (sub, p) = split_step(1.0, &r, 1.0);
        assert_eq!(sub, 16);
        assert!(p.iter().sum::<f64>() < 0.1);
        assert_eq!(split_step(1.0, &r, 0.01).0, 1);
    }

    #[test]
    fn zero_rates_change_nothing() {
        let p = params(CollisionRates::zero());
        let (mut e, mut i, mut n) = (filled(5, 0.1), filled(5, 0.01), filled(5, 0.001));
        let before = (e.clone(), i.clone(), n.clone());
        let t = collide_cell(&mut e, &mut i, &mut n, &p, &mut rng());
        assert_eq!(t, CollisionTally::default());
        assert_eq!((e, i, n), before);
    }

    #[test]
    fn ionization_bookkeeping() {
        let mut p = params(CollisionRates { rate_ionization_m3s: 1e-6, ..CollisionRates::zero() });
        p.neutral_density_per_macro = 1.0;
        // One electron, one neutral: force the event with a huge rate.
        p.rates.rate_ionization_m3s = 50.0;
        let (mut e, mut i, mut n) = (filled(1, 0.1), filled(0, 0.0), filled(1, 0.003));
        let atom = n.get(0);
        let t = collide_cell(&mut e, &mut i, &mut n, &p, &mut rng());
        assert_eq!(t.ionization, 1);
        assert_eq!((e.len(), i.len(), n.len()), (2, 1, 0));
        assert_eq!(i.get(0), atom);
        assert_eq!(e.x[1], e.x[0]);
    }

    #[test]
    fn ionization_shares_residual_energy() {
        let mut p = params(CollisionRates { rate_ionization_m3s: 50.0, ionization_threshold_ev: 1.0, ..CollisionRates::zero() });
        p.velocity_unit = 1.0;
        let v0 = 3.0e6;
        let (mut e, mut i, mut n) = (filled(1, 0.0), filled(0, 0.0), filled(1, 0.0));
        e.vx[0] = v0;
        e.vy[0] = 0.0;
        e.vz[0] = 0.0;
        collide_cell(&mut e, &mut i, &mut n, &p, &mut rng());
        let ke = |v: f64| 0.5 * ELECTRON_MASS * v * v;
        let expect = 0.5 * (ke(v0) - EV_TO_J);
        for k in 0..2 {
            assert!((ke(speed(&e, k)) - expect).abs() <= 1e-12 * expect);
        }
    }

    #[test]
    fn elastic_preserves_speed() {
        let p = params(CollisionRates { rate_elastic_m3s: 0.05, ..CollisionRates::zero() });
        let (mut e, mut i, mut n) = (filled(200, 0.3), filled(0, 0.0), filled(1, 0.0));
        let s0: Vec<f64> = (0..200).map(|k| speed(&e, k)).collect();
        let t = collide_cell(&mut e, &mut i, &mut n, &p, &mut rng());
        assert!(t.elastic > 0);
        for k in 0..200 {
            assert!((speed(&e, k) - s0[k]).abs() <= 1e-12 * s0[k]);
        }
    }

    #[test]
    fn excitation_removes_threshold_or_everything() {
        let mut p = params(CollisionRates {
            rate_excitation_m3s: 0.05,
            excitation_threshold_ev: 10.0,
            ..CollisionRates::zero()
        });
        p.velocity_unit = 1.0;
        let ke = |v: f64| 0.5 * ELECTRON_MASS * v * v;
        let fast = (2.0 * 25.0 * EV_TO_J / ELECTRON_MASS).sqrt();
        let slow = (2.0 * 4.0 * EV_TO_J / ELECTRON_MASS).sqrt();
        let (mut e, mut i, mut n) = (filled(400, 0.0), filled(0, 0.0), filled(1, 0.0));
        e.vx = (0..400).map(|k| if k % 2 == 0 { fast } else { slow }).collect();
        e.vy = vec![0.0; 400];
        e.vz = vec![0.0; 400];
        let before = e.clone();
        let t = collide_cell(&mut e, &mut i, &mut n, &p, &mut rng());
        let mut changed = 0;
        for k in 0..400 {
            if e.get(k) == before.get(k) {
                continue;
            }
            changed += 1;
            if k % 2 == 0 {
                let left = 15.0 * EV_TO_J;
                assert!((ke(speed(&e, k)) - left).abs() <= 1e-12 * left);
            } else {
                assert_eq!(speed(&e, k), 0.0);
            }
        }
        assert!(changed > 0);
        assert_eq!(t.excitation, changed);
    }

    #[test]
    fn exhausted_neutrals_suppress_ionization() {
        let p = params(CollisionRates { rate_ionization_m3s: 0.05, ..CollisionRates::zero() });
        let (mut e, mut i, mut n) = (filled(200, 0.1), filled(0, 0.0), filled(1, 0.0));
        let t = collide_cell(&mut e, &mut i, &mut n, &p, &mut rng());
        assert_eq!(t.ionization, 1);
        assert!(t.suppressed > 0);
        assert_eq!((e.len(), i.len(), n.len()), (201, 1, 0));
    }

    #[test]
    fn negative_rate_rejected() {
        let r = CollisionRates { rate_elastic_m3s: -1.0, ..CollisionRates::zero() };
        assert!(r.validate().is_err());
    }

    #[test]
    fn tally_csv_header() {
        let mut buf = Vec::new();
        let row = TallyRow { step: 3, tally: CollisionTally { elastic: 1, excitation: 2, ionization: 3, suppressed: 0 }, n_neutral_total: 9 };
        write_tally_csv(&[row], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "step,elastic,excitation,ionization,suppressed,n_neutral_total\n3,1,2,3,0,9\n"
        );
    }
}
