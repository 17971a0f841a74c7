use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use picmc_bench::checks::run_checks;
use picmc_bench::scaling::{strong_scaling_sweep, weak_scaling_sweep, write_scaling_csv, ScalingReport};
use picmc_bench::sim::{run_simulation_with, write_outputs, RunOptions};
use picmc_bench::Phase;
use picmc_core::layout::{bench_layouts, write_layout_csv, LayoutBenchConfig};
use picmc_core::{LayoutVariant, Result, RunConfig};

#[derive(Parser)]
#[command(name = "picmc", version, about = "1D3V PIC/MCC engine benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its CSV reports.
    Run(Common),
    /// Fixed problem size over several worker counts.
    StrongScale(Common),
    /// Problem size proportional to the worker count.
    WeakScale(Common),
    /// Time the mover on every particle layout.
    BenchLayouts {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Mean particles per cell.
        #[arg(long, default_value_t = 100)]
        ppc: usize,
    },
    /// Run the built-in self-checks against a configuration.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; the desk-scale scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker count, or a comma-separated list for the scaling sweeps.
    #[arg(long, value_delimiter = ',')]
    workers: Vec<usize>,
    #[arg(long)]
    layout: Option<LayoutVariant>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::desk_scale(),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(l) = self.layout {
            c.layout = l;
        }
        if let Some(&w) = self.workers.first() {
            c.workers = w;
        }
        if let Some(o) = &self.out {
            c.output_dir = Some(o.clone());
        }
        c.validate()?;
        Ok(c)
    }

    fn out_dir(&self, c: &RunConfig) -> PathBuf {
        c.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    fn worker_list(&self) -> Vec<usize> {
        if self.workers.is_empty() {
            vec![1, 2, 4]
        } else {
            self.workers.clone()
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn print_scaling(report: &ScalingReport) {
    println!("{:>8} {:>8} {:>12} {:>12} {:>9} {:>8} {:>8}", "workers", "nc", "t_total", "t_mover", "speedup", "pe", "T(n)/T1");
    for r in &report.rows {
        println!(
            "{:>8} {:>8} {:>12.4} {:>12.4} {:>9.3} {:>8.2} {:>8.3}",
            r.workers, r.nc, r.t_total, r.t_mover, r.speedup, r.pe, r.runtime_ratio
        );
    }
    if let Some(same) = report.diagnostics_identical {
        println!("diagnostics identical across rows: {same}");
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(common) => {
            let c = common.config()?;
            let dir = common.out_dir(&c);
            let out = run_simulation_with(&c, RunOptions { record_density: false, trace: true })?;
            write_outputs(&out, &c, &dir)?;
            let p = &out.metrics.phases;
            for ph in Phase::ALL {
                println!("{:>8} {:>12.6} s", ph.name(), p.get(ph));
            }
            let last = out.metrics.diagnostics.last().expect("initial row");
            println!("step {} totals {:?}; reports in {}", last.step, last.totals, dir.display());
        }
        Command::StrongScale(common) => {
            let c = common.config()?;
            let report = strong_scaling_sweep(&c, &common.worker_list())?;
            write_scaling_csv(&report, create(&common.out_dir(&c), "scaling.csv")?)?;
            print_scaling(&report);
        }
        Command::WeakScale(common) => {
            let c = common.config()?;
            let report = weak_scaling_sweep(&c, &common.worker_list())?;
            write_scaling_csv(&report, create(&common.out_dir(&c), "scaling.csv")?)?;
            print_scaling(&report);
        }
        Command::BenchLayouts { common, reps, ppc } => {
            let c = common.config()?;
            let cfg = LayoutBenchConfig { nc: c.grid.nc(), ppc, seed: c.seed, ..LayoutBenchConfig::default() };
            let rows = bench_layouts(&cfg, reps)?;
            write_layout_csv(&rows, create(&common.out_dir(&c), "layouts.csv")?)?;
            println!("cell-local collision pairing is the locality argument for the cell-sorted layout; timings are host specific");
            for r in rows {
                println!(
                    "{:<18} {:<8} {:>9} particles {:>9.3} ns/particle-step (IQR {:.3})",
                    r.layout.name(), r.scenario, r.ppc_total, r.ns_per_particle_median, r.ns_per_particle_iqr
                );
            }
        }
        Command::Validate(common) => {
            let c = common.config()?;
            let checks = run_checks(&c)?;
            let mut ok = true;
            for k in &checks {
                println!("{} {}: {}", if k.passed { "PASS" } else { "FAIL" }, k.name, k.detail);
                ok &= k.passed;
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
