use std::io;

use picmc_core::{LayoutVariant, PicError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Deposit,
    Smooth,
    Solve,
    Gather,
    Mover,
    Resort,
    Collide,
    Migrate,
    Total,
}

impl Phase {
    pub const ALL: [Phase; 9] = [
        Phase::Deposit,
        Phase::Smooth,
        Phase::Solve,
        Phase::Gather,
        Phase::Mover,
        Phase::Resort,
        Phase::Collide,
        Phase::Migrate,
        Phase::Total,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Deposit => "deposit",
            Phase::Smooth => "smooth",
            Phase::Solve => "solve",
            Phase::Gather => "gather",
            Phase::Mover => "mover",
            Phase::Resort => "resort",
            Phase::Collide => "collide",
            Phase::Migrate => "migrate",
            Phase::Total => "total",
        }
    }
}

/// Elapsed seconds per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimes([f64; 9]);

impl PhaseTimes {
    pub fn get(&self, p: Phase) -> f64 {
        self.0[p as usize]
    }

    pub fn add(&mut self, p: Phase, seconds: f64) {
        self.0[p as usize] += seconds;
    }

    pub fn set(&mut self, p: Phase, seconds: f64) {
        self.0[p as usize] = seconds;
    }

    /// Sum of every phase except the total.
    pub fn enclosed(&self) -> f64 {
        Phase::ALL[..8].iter().map(|p| self.get(*p)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunDescriptor {
    pub config_hash: String,
    pub workers: usize,
    pub layout: LayoutVariant,
    pub nc: usize,
    pub n_steps: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub phases: PhaseTimes,
    pub diagnostics: Vec<crate::sim::DiagRow>,
    pub descriptor: RunDescriptor,
}

/// `t1 / tn`.
pub fn compute_speedup(t1: f64, tn: f64) -> Result<f64> {
    if !(t1 > 0.0) || !(tn > 0.0) {
        return Err(PicError::InvalidConfig(format!("speedup needs positive times, got {t1} and {tn}")));
    }
    Ok(t1 / tn)
}

/// `100 * speedup / workers`, in percent.
pub fn compute_parallel_efficiency(speedup: f64, workers: usize) -> Result<f64> {
    if workers == 0 {
        return Err(PicError::InvalidConfig("parallel efficiency needs at least one worker".into()));
    }
    Ok(100.0 * speedup / workers as f64)
}

/// Writes `phase,seconds` rows.
pub fn write_metrics_csv<W: io::Write>(phases: &PhaseTimes, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["phase", "seconds"])?;
    for p in Phase::ALL {
        w.write_record([p.name().to_string(), format!("{:.9}", phases.get(p))])?;
    }
    w.flush()?;
    Ok(())
}
