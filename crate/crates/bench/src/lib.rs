//! Benchmark harness: the full simulation cycle, phase timers, scaling sweeps
//! and CSV reports.

pub mod checks;
pub mod metrics;
pub mod scaling;
pub mod sim;

pub use metrics::{compute_parallel_efficiency, compute_speedup, Phase, PhaseTimes, RunMetrics};
pub use scaling::{strong_scaling_sweep, weak_scaling_sweep, ScalingReport, ScalingRow};
pub use sim::{run_simulation, run_simulation_with, RunOptions, RunOutput};
