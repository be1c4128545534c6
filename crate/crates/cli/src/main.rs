use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use reinsure_lab::{run, CliError, Command, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "reinsure-lab", version, about = "Investment/reinsurance experiments under Bayesian learning")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Filter trajectory of one scenario.
    FilterDemo(Common),
    /// A-priori retention bounds and certainty-equivalent retention paths.
    Bounds(Common),
    /// Surplus paths of every configured strategy on one shared scenario.
    Surplus(Common),
    /// Expected utility, standard error and entropic risk per strategy.
    ValueCompare(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to `output_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "REINSURE_SEED")]
    seed: Option<u64>,
    /// Number of time points of the bounds grid.
    #[arg(long)]
    grid: Option<usize>,
    /// Monte Carlo paths.
    #[arg(long)]
    paths: Option<usize>,
}

fn execute(command: Command, args: Common) -> Result<Vec<PathBuf>, CliError> {
    let config = ExperimentConfig::load(&args.config)?;
    let overrides = Overrides { seed: args.seed, grid: args.grid, paths: args.paths, out: args.out };
    let experiment = config.resolve(&overrides)?;
    let out = experiment.output_dir.clone().ok_or_else(|| CliError::Config {
        path: args.config.display().to_string(),
        message: "no output directory: pass --out or set `output_dir`".into(),
    })?;
    run(command, &experiment, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::FilterDemo(a) => (Command::FilterDemo, a),
        Cmd::Bounds(a) => (Command::Bounds, a),
        Cmd::Surplus(a) => (Command::Surplus, a),
        Cmd::ValueCompare(a) => (Command::ValueCompare, a),
    };
    match execute(command, args) {
        Ok(files) => {
            for file in files {
                println!("{}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("reinsure-lab {}: {err}", command.name());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
