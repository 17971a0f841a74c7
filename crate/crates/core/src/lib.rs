//! Electrostatic 1D3V particle-in-cell Monte Carlo engine on cell-sorted
//! particle storage.

pub mod collisions;
pub mod config;
pub mod constants;
pub mod decomposition;
pub mod error;
pub mod fields;
pub mod grid;
pub mod init;
pub mod layout;
pub mod mover;
pub mod rng;
pub mod species;
pub mod store;
pub mod tridiag;

pub use collisions::{CollisionParams, CollisionRates, CollisionTally};
pub use config::{CollisionConfig, RunConfig};
pub use constants::PhysicalConstants;
pub use decomposition::{partition_grid, MigrationMsg, Partition};
pub use error::{PicError, Result};
pub use fields::{FieldBoundary, FieldState};
pub use grid::Grid1D;
pub use init::{init_plasma, init_plasma_range};
pub use layout::{LayoutStore, LayoutVariant};
pub use species::{SpeciesDef, SpeciesTable};
pub use store::{CellParticles, CellSortedStore, Particle};
