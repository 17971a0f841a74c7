use serde::{Deserialize, Serialize};

use crate::error::{PicError, Result};

/// Physical and bookkeeping parameters of one particle species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpeciesKeys", into = "SpeciesKeys")]
pub struct SpeciesDef {
    pub name: String,
    pub charge_c: f64,
    pub mass_kg: f64,
    /// Subcycle factor: the species is moved on every `nstep`-th step with an
    /// `nstep`-fold displacement.
    pub nstep: u32,
    pub charged: bool,
    /// Whether the species participates in the mover at all.
    pub active_mover: bool,
    /// Enables the transverse position `yp`.
    pub track_transverse: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeciesKeys {
    name: String,
    charge_c: f64,
    mass_kg: f64,
    #[serde(default = "one")]
    nstep: u32,
    #[serde(default)]
    charged: Option<bool>,
    #[serde(default = "yes")]
    active_mover: bool,
    #[serde(default)]
    track_transverse: bool,
}

fn one() -> u32 {
    1
}

fn yes() -> bool {
    true
}

impl TryFrom<SpeciesKeys> for SpeciesDef {
    type Error = PicError;
    fn try_from(k: SpeciesKeys) -> Result<Self> {
        let charged = k.charge_c != 0.0;
        if let Some(flag) = k.charged {
            if flag != charged {
                return Err(PicError::InvalidConfig(format!(
                    "species `{}`: charged = {flag} contradicts charge_c = {}",
                    k.name, k.charge_c
                )));
            }
        }
        let def = SpeciesDef {
            name: k.name,
            charge_c: k.charge_c,
            mass_kg: k.mass_kg,
            nstep: k.nstep,
            charged,
            active_mover: k.active_mover,
            track_transverse: k.track_transverse,
        };
        def.validate()?;
        Ok(def)
    }
}

impl From<SpeciesDef> for SpeciesKeys {
    fn from(d: SpeciesDef) -> Self {
        SpeciesKeys {
            name: d.name,
            charge_c: d.charge_c,
            mass_kg: d.mass_kg,
            nstep: d.nstep,
            charged: Some(d.charged),
            active_mover: d.active_mover,
            track_transverse: d.track_transverse,
        }
    }
}

impl SpeciesDef {
    pub fn new(name: &str, charge_c: f64, mass_kg: f64) -> Self {
        SpeciesDef {
            name: name.to_string(),
            charge_c,
            mass_kg,
            nstep: 1,
            charged: charge_c != 0.0,
            active_mover: true,
            track_transverse: false,
        }
    }

    pub fn with_nstep(mut self, nstep: u32) -> Self {
        self.nstep = nstep;
        self
    }

    pub fn with_transverse(mut self, on: bool) -> Self {
        self.track_transverse = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass_kg > 0.0) {
            return Err(PicError::InvalidConfig(format!("species `{}`: mass must be positive", self.name)));
        }
        if self.nstep < 1 {
            return Err(PicError::InvalidConfig(format!("species `{}`: nstep must be >= 1", self.name)));
        }
        if self.charged != (self.charge_c != 0.0) {
            return Err(PicError::InvalidConfig(format!(
                "species `{}`: charged flag inconsistent with charge",
                self.name
            )));
        }
        Ok(())
    }

    pub fn charge_over_mass(&self) -> f64 {
        self.charge_c / self.mass_kg
    }

    /// Whether the mover advances this species on `step` (1-based).
    pub fn moves_on(&self, step: u64) -> bool {
        self.active_mover && step % u64::from(self.nstep) == 0
    }
}

/// Species definitions together with the real-particle density carried by one
/// macro-particle in a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesTable {
    pub defs: Vec<SpeciesDef>,
    /// Density (per m^3) contributed by one macro-particle in a cell.
    pub macro_density_m3: Vec<f64>,
}

impl SpeciesTable {
    pub fn new(defs: Vec<SpeciesDef>, macro_density_m3: Vec<f64>) -> Result<Self> {
        if defs.len() != macro_density_m3.len() {
            return Err(PicError::InvalidConfig("one macro density per species required".into()));
        }
        Ok(SpeciesTable { defs, macro_density_m3 })
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.defs.iter().position(|d| d.name == name)
    }

    /// Charge density (C/m^3) deposited by one macro-particle of full weight.
    pub fn charge_density_per_macro(&self, isp: usize) -> f64 {
        self.defs[isp].charge_c * self.macro_density_m3[isp]
    }
}
