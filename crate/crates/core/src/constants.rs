//! Physical constants (SI) and the per-run constant set.

use serde::{Deserialize, Serialize};

use crate::error::{PicError, Result};

pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19; // C
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31; // kg
pub const DEUTERON_MASS: f64 = 3.343_583_772_4e-27; // kg
pub const DEUTERIUM_ATOM_MASS: f64 = DEUTERON_MASS + ELECTRON_MASS; // kg
pub const BOLTZMANN: f64 = 1.380_649e-23; // J/K
pub const EPSILON_0: f64 = 8.854_187_812_8e-12; // F/m
pub const EV_TO_J: f64 = ELEMENTARY_CHARGE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub epsilon0: f64,
    pub dt_s: f64,
}

impl PhysicalConstants {
    pub fn new(epsilon0: f64, dt_s: f64) -> Result<Self> {
        if !(epsilon0 > 0.0) || !(dt_s > 0.0) {
            return Err(PicError::InvalidConfig(format!(
                "epsilon0 ({epsilon0}) and dt_s ({dt_s}) must be positive"
            )));
        }
        Ok(PhysicalConstants { epsilon0, dt_s })
    }

    pub fn vacuum(dt_s: f64) -> Result<Self> {
        Self::new(EPSILON_0, dt_s)
    }
}
