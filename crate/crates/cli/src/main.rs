use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fsir::{run_experiment, CliError, ExperimentConfig, Mode};

/// Functional sliced inverse regression for sparse longitudinal data.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset from the single-index Brownian model.
    Simulate(Flags),
    /// Estimate e.d.r. directions from a CSV file or simulated data.
    Fit(Flags),
    /// Monte Carlo accuracy table for complete and sparse designs.
    #[command(name = "replicate-table1")]
    ReplicateTable1(Flags),
    /// √IVAR ratios across increasing sample sizes.
    RateCheck(Flags),
    /// Fit the link function on the estimated indices.
    Link(Flags),
}

/// Flags override the corresponding fields of the configuration file.
#[derive(Args)]
struct Flags {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for Monte Carlo runs (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Fraction of variance explained kept when truncating the covariance.
    #[arg(long)]
    fve: Option<f64>,
    /// Number of directions.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    grid_size: Option<usize>,
    /// Long-format CSV with columns subject_id,time,value,response.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    n_runs: Option<usize>,
    /// Sample size for simulated data.
    #[arg(long)]
    n: Option<usize>,
}

impl Flags {
    fn into_config(self, mode: Mode) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_path(path)?,
            None => ExperimentConfig::default(),
        };
        c.mode = Some(mode);
        c.seed = self.seed.or(c.seed);
        c.output_dir = self.out.unwrap_or(c.output_dir);
        c.workers = self.workers.or(c.workers);
        c.fve_threshold = self.fve.or(c.fve_threshold);
        c.k = self.k.unwrap_or(c.k);
        c.grid_size = self.grid_size.unwrap_or(c.grid_size);
        c.input = self.input.or(c.input);
        c.n_runs = self.n_runs.unwrap_or(c.n_runs);
        c.sim.n = self.n.unwrap_or(c.sim.n);
        Ok(c)
    }
}

fn main() -> ExitCode {
    let (mode, flags) = match Cli::parse().command {
        Command::Simulate(f) => (Mode::Simulate, f),
        Command::Fit(f) => (Mode::Fit, f),
        Command::ReplicateTable1(f) => (Mode::ReplicateTable1, f),
        Command::RateCheck(f) => (Mode::RateCheck, f),
        Command::Link(f) => (Mode::Link, f),
    };
    let fallback_out = flags.out.clone();
    let config = flags.into_config(mode);
    let out = config.as_ref().ok().map(|c| c.output_dir.clone()).or(fallback_out);
    match config.and_then(|c| run_experiment(&c)) {
        Ok(report) => {
            for f in &report.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let record = e.record();
            eprintln!("{record}");
            if let Some(dir) = out {
                if std::fs::create_dir_all(&dir).is_ok() {
                    let _ = std::fs::write(dir.join("error.json"), format!("{record:#}\n"));
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
