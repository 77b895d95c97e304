//! `compsim` binary: run one named experiment against a config file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use compsim::cli::{run, Experiment, RunManifest};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExperimentArg {
    /// Coverage and throughput vs mean overhead delay, with the no-CoMP baseline.
    DelaySweep,
    /// Coverage and throughput vs the number of coordinated cells.
    LSweep,
    /// Cross- vs intra-tier coordination losses, over both sweep axes.
    IntraTierLoss,
    /// Empirical SIR CDF against the closed-form bounds and dominance check.
    BoundsValidation,
    /// Closed-form vs renewal-oracle cooperation time fractions per delay mean.
    TimeFractionReport,
}

impl From<ExperimentArg> for Experiment {
    fn from(value: ExperimentArg) -> Self {
        match value {
            ExperimentArg::DelaySweep => Experiment::DelaySweep,
            ExperimentArg::LSweep => Experiment::LSweep,
            ExperimentArg::IntraTierLoss => Experiment::IntraTierLoss,
            ExperimentArg::BoundsValidation => Experiment::BoundsValidation,
            ExperimentArg::TimeFractionReport => Experiment::TimeFractionReport,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "compsim",
    about = "Downlink CoMP zero-forcing beamforming simulation in K-tier heterogeneous networks"
)]
struct Cli {
    /// Experiment config file (JSON; see the README for the schema).
    #[arg(long)]
    config: PathBuf,
    /// Which experiment to run.
    #[arg(long, value_enum)]
    experiment: ExperimentArg,
    /// Master seed; every output is reproducible from (config, seed, trials).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo trials per estimate.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Output directory for CSV tables and the manifest echo.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let manifest = RunManifest {
        experiment: cli.experiment.into(),
        config_path: cli.config,
        seed: cli.seed,
        trials: cli.trials,
        output_dir: cli.out,
        force: cli.force,
    };
    match run(&manifest) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
