use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use isac_beamscan::experiment::{Experiment, ExperimentSpec, Figure, RunnerError, SweepAxis};
use isac_beamscan::sensing::DEFAULT_GRID_POINTS;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Fig3,
    Fig4,
    Fig5,
    Sweep,
}

impl From<Command> for Figure {
    fn from(c: Command) -> Self {
        match c {
            Command::Fig3 => Figure::Fig3,
            Command::Fig4 => Figure::Fig4,
            Command::Fig5 => Figure::Fig5,
            Command::Sweep => Figure::CustomSweep,
        }
    }
}

/// Regenerates the beam-scanning ISAC figure data as CSV.
#[derive(Debug, Parser)]
#[command(name = "isac-beamscan", version)]
struct Args {
    command: Command,
    /// Scenario file (`key = value` per line).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per point.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Config override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Extra target angles in degrees for fig3.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta_set: Vec<f64>,
    /// key:start:stop:points:scale, scale one of linear, log, doubling.
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
    /// Write per-trial angle errors under OUT/trials.
    #[arg(long)]
    dump_trials: bool,
}

fn run(args: Args) -> Result<(), RunnerError> {
    let mut spec = ExperimentSpec::new(args.command.into(), args.config, args.out);
    spec.workers = args.workers.max(1);
    spec.overrides = args.overrides;
    spec.theta_set_deg = args.theta_set;
    spec.seed = args.seed;
    spec.trials = args.trials;
    spec.grid_points = args.grid_points;
    spec.dump_trials = args.dump_trials;
    spec.sweep = args.sweep.as_deref().map(str::parse::<SweepAxis>).transpose()?;
    let summary = Experiment::from_spec(spec)?.run()?;
    eprintln!(
        "wrote {} ({} rows, {} skipped)",
        summary.csv_path.display(),
        summary.rows,
        summary.skipped
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("isac-beamscan: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
