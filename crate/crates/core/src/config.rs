//! Run configuration, read from TOML. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::collisions::CollisionRates;
use crate::constants::{
    PhysicalConstants, DEUTERIUM_ATOM_MASS, DEUTERON_MASS, ELECTRON_MASS, ELEMENTARY_CHARGE,
    EPSILON_0,
};
use crate::error::{PicError, Result};
use crate::grid::Grid1D;
use crate::layout::LayoutVariant;
use crate::species::{SpeciesDef, SpeciesTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    pub electron: String,
    pub ion: String,
    pub neutral: String,
    pub rates: CollisionRates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: Grid1D,
    pub species: Vec<SpeciesDef>,
    pub temperatures_ev: Vec<f64>,
    pub densities_m3: Vec<f64>,
    /// Initial macro-particles per cell per species.
    pub ppc0: usize,
    pub n_steps: u64,
    pub seed: u64,
    pub dt_s: f64,
    #[serde(default = "vacuum_permittivity")]
    pub epsilon0: f64,
    #[serde(default)]
    pub collisions: Option<CollisionConfig>,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default = "default_grainsize")]
    pub grainsize: usize,
    #[serde(default)]
    pub layout: LayoutVariant,
    /// When false the deposit still runs but smoothing and the Poisson solve
    /// are skipped and the field stays zero.
    #[serde(default)]
    pub field_solver: bool,
    #[serde(default = "one")]
    pub smoothing_passes: usize,
    /// Initial per-cell capacity as a multiple of `ppc0`.
    #[serde(default = "default_slack")]
    pub slack_factor: f64,
    /// Upper bound on particles allocated per species at initialization.
    #[serde(default)]
    pub max_particles: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn yes() -> bool {
    true
}
fn one() -> usize {
    1
}
fn default_grainsize() -> usize {
    500
}
fn default_slack() -> f64 {
    1.5
}
fn vacuum_permittivity() -> f64 {
    EPSILON_0
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PicError::InvalidConfig(m));
        let ns = self.species.len();
        if ns == 0 {
            return bad("at least one species required".into());
        }
        if self.temperatures_ev.len() != ns || self.densities_m3.len() != ns {
            return bad(format!(
                "{ns} species but {} temperatures and {} densities",
                self.temperatures_ev.len(),
                self.densities_m3.len()
            ));
        }
        for d in &self.species {
            d.validate()?;
        }
        for (i, d) in self.species.iter().enumerate() {
            if self.species[..i].iter().any(|o| o.name == d.name) {
                return bad(format!("duplicate species name `{}`", d.name));
            }
        }
        if self.temperatures_ev.iter().any(|t| !(*t >= 0.0)) {
            return bad("temperatures must be >= 0".into());
        }
        if self.densities_m3.iter().any(|n| !(*n > 0.0)) {
            return bad("densities must be > 0".into());
        }
        if self.ppc0 < 1 {
            return bad("ppc0 must be >= 1".into());
        }
        if self.workers < 1 || self.workers > self.grid.nc() {
            return bad(format!("workers must be in 1..={}", self.grid.nc()));
        }
        if self.grainsize < 1 {
            return bad("grainsize must be >= 1".into());
        }
        if !(self.slack_factor >= 1.0) {
            return bad("slack_factor must be >= 1".into());
        }
        PhysicalConstants::new(self.epsilon0, self.dt_s)?;
        if let Some(c) = &self.collisions {
            c.rates.validate()?;
            let idx = |name: &str| {
                self.species
                    .iter()
                    .position(|d| d.name == name)
                    .ok_or_else(|| PicError::InvalidConfig(format!("collision species `{name}` not defined")))
            };
            let (e, i, n) = (idx(&c.electron)?, idx(&c.ion)?, idx(&c.neutral)?);
            if e == i || e == n || i == n {
                return bad("electron, ion and neutral species must differ".into());
            }
            if !self.species[e].charged || !self.species[i].charged || self.species[n].charged {
                return bad("electron and ion must be charged, neutral uncharged".into());
            }
            if c.enabled {
                let w = |k: usize| self.densities_m3[k] / self.ppc0 as f64;
                if w(e) != w(i) || w(e) != w(n) {
                    return bad("ionization requires equal macro-particle weights for electron, ion and neutral".into());
                }
            }
        }
        Ok(())
    }

    pub fn constants(&self) -> PhysicalConstants {
        PhysicalConstants { epsilon0: self.epsilon0, dt_s: self.dt_s }
    }

    pub fn species_table(&self) -> SpeciesTable {
        SpeciesTable {
            defs: self.species.clone(),
            macro_density_m3: self.densities_m3.iter().map(|n| n / self.ppc0 as f64).collect(),
        }
    }

    pub fn track_transverse(&self) -> Vec<bool> {
        self.species.iter().map(|d| d.track_transverse).collect()
    }

    /// Full-size ionization test case: 1 m, 100,000 cells, 100 particles per
    /// cell per species, 200,000 steps of 4e-14 s.
    pub fn ionization_full_scale() -> Self {
        let mut c = Self::desk_scale();
        c.grid = Grid1D::new(100_000, 1.0).expect("valid grid");
        c.ppc0 = 100;
        c.n_steps = 200_000;
        c
    }

    /// The full ionization case divided by 100 in mesh and duration, with the
    /// 10 micrometre cell width kept: 1,000 cells, 10 particles per cell per
    /// species, 2,000 steps. Rates are set so that `n_e R dt = 1e-3`.
    pub fn desk_scale() -> Self {
        let n0 = 1.0e21;
        let dt = 4.0e-14;
        RunConfig {
            grid: Grid1D::new(1_000, 0.01).expect("valid grid"),
            species: vec![
                SpeciesDef::new("e", -ELEMENTARY_CHARGE, ELECTRON_MASS),
                SpeciesDef::new("D+", ELEMENTARY_CHARGE, DEUTERON_MASS).with_nstep(10),
                SpeciesDef::new("D", 0.0, DEUTERIUM_ATOM_MASS).with_nstep(10),
            ],
            temperatures_ev: vec![20.0, 20.0, 1.0],
            densities_m3: vec![n0; 3],
            ppc0: 10,
            n_steps: 2_000,
            seed: 20_240_101,
            dt_s: dt,
            epsilon0: EPSILON_0,
            collisions: Some(CollisionConfig {
                enabled: true,
                electron: "e".into(),
                ion: "D+".into(),
                neutral: "D".into(),
                rates: CollisionRates {
                    rate_ionization_m3s: 1.0e-3 / (n0 * dt),
                    rate_elastic_m3s: 5.0e-11,
                    rate_excitation_m3s: 1.0e-11,
                    excitation_threshold_ev: 10.2,
                    ionization_threshold_ev: 13.6,
                },
            }),
            workers: 1,
            grainsize: 500,
            layout: LayoutVariant::CellSorted,
            field_solver: false,
            smoothing_passes: 1,
            slack_factor: 1.5,
            max_particles: None,
            output_dir: None,
        }
    }

    /// Stable hash of the serialized configuration, for run descriptors.
    pub fn fingerprint(&self) -> String {
        // FNV-1a over the canonical TOML text.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.to_toml_string().bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}
