use picmc_scheduler::SchedulerError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PicError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("allocating {requested} particles for species `{species}` exceeds the cap of {cap}")]
    AllocationCap {
        species: String,
        requested: u64,
        cap: u64,
    },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("grid of {nc} cells is too small: {what}")]
    GridSize { nc: usize, what: &'static str },
    #[error("CFL violation: species `{species}` in cell {cell} would move {shift} cells in one step")]
    Cfl {
        species: String,
        cell: usize,
        shift: i64,
    },
    #[error("particle of species `{species}` would migrate from worker {from} to non-adjacent worker {to}")]
    NonAdjacentMigration {
        species: String,
        from: usize,
        to: usize,
    },
    #[error("{phase} phase, step {step}: {source}")]
    Phase {
        phase: &'static str,
        step: u64,
        #[source]
        source: Box<PicError>,
    },
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl PicError {
    pub fn in_phase(self, phase: &'static str, step: u64) -> Self {
        PicError::Phase { phase, step, source: Box::new(self) }
    }
}

pub type Result<T, E = PicError> = std::result::Result<T, E>;
