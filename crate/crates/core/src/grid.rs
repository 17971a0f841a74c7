use serde::{Deserialize, Serialize};

use crate::error::{PicError, Result};

/// Uniform 1D mesh of `nc` cells and `nc + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridKeys", into = "GridKeys")]
pub struct Grid1D {
    nc: usize,
    length_m: f64,
    dx_m: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridKeys {
    nc: usize,
    length_m: f64,
}

impl TryFrom<GridKeys> for Grid1D {
    type Error = PicError;
    fn try_from(k: GridKeys) -> Result<Self> {
        Grid1D::new(k.nc, k.length_m)
    }
}

impl From<Grid1D> for GridKeys {
    fn from(g: Grid1D) -> Self {
        GridKeys { nc: g.nc, length_m: g.length_m }
    }
}

impl Grid1D {
    pub fn new(nc: usize, length_m: f64) -> Result<Self> {
        if nc < 2 {
            return Err(PicError::GridSize { nc, what: "at least 2 cells required" });
        }
        if !(length_m > 0.0) || !length_m.is_finite() {
            return Err(PicError::InvalidConfig(format!("grid length {length_m} must be positive")));
        }
        Ok(Grid1D { nc, length_m, dx_m: length_m / nc as f64 })
    }

    pub fn nc(&self) -> usize {
        self.nc
    }

    pub fn nodes(&self) -> usize {
        self.nc + 1
    }

    pub fn length_m(&self) -> f64 {
        self.length_m
    }

    pub fn dx_m(&self) -> f64 {
        self.dx_m
    }

    pub fn node_x(&self, node: usize) -> f64 {
        node as f64 * self.dx_m
    }

    /// Same cell width, `factor` times as many cells.
    pub fn scaled(&self, factor: usize) -> Result<Self> {
        Grid1D::new(self.nc * factor, self.length_m * factor as f64)
    }
}
