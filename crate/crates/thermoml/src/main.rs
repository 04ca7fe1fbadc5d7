use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};
use thermoml::manifest::Manifest;
use thermoml::run::load_config;
use thermoml::{run, validate_config, CliError, ConfigDocument, Format, RunOptions, Subcommand, EXIT_OK, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "thermoml", version, about = "Seeded, reproducible statistical-physics ML experiments")]
enum Cli {
    /// Entropy, KL divergence, mutual information and the IB objective
    Entropy(RunArgs),
    /// Metropolis sampling of an Ising model
    Ising(RunArgs),
    /// Simulated annealing for an Ising ground state
    Anneal(RunArgs),
    /// Simulated annealing for a double-digest instance
    Digest(RunArgs),
    /// Energy-based losses or Boltzmann machine training
    Ebm(RunArgs),
    /// Convolution of coefficients, distributions or signals
    Conv(RunArgs),
    /// Three-hypothesis boosting with a synthetic weak learner
    Boost(RunArgs),
    /// Value iteration and free-energy value iteration
    Activeinf(RunArgs),
    /// Mean-field Q-learning on the Ising game
    Marl(RunArgs),
    /// Check a config without running anything
    Validate {
        #[arg(value_enum)]
        subcommand: Subcommand,
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-run the experiment a manifest describes
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; omitted means every key takes its default
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Encoding of trace tables
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn load(path: Option<&PathBuf>) -> Result<ConfigDocument, CliError> {
    match path {
        Some(p) => load_config(p),
        None => Ok(ConfigDocument::from_entries(Default::default(), std::env::current_dir()?)),
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (sub, args) = match cli {
        Cli::Entropy(a) => (Subcommand::Entropy, a),
        Cli::Ising(a) => (Subcommand::Ising, a),
        Cli::Anneal(a) => (Subcommand::Anneal, a),
        Cli::Digest(a) => (Subcommand::Digest, a),
        Cli::Ebm(a) => (Subcommand::Ebm, a),
        Cli::Conv(a) => (Subcommand::Conv, a),
        Cli::Boost(a) => (Subcommand::Boost, a),
        Cli::Activeinf(a) => (Subcommand::Activeinf, a),
        Cli::Marl(a) => (Subcommand::Marl, a),
        Cli::Validate { subcommand, config } => {
            let diags = validate_config(subcommand, &load_config(&config)?);
            if diags.is_empty() {
                println!("ok");
                return Ok(());
            }
            return Err(CliError::Config(diags));
        }
        Cli::Replay { manifest, out } => {
            let m = Manifest::read(&manifest)?;
            run(&RunOptions::from_manifest(&m, out)?)?;
            return Ok(());
        }
    };
    let opts = RunOptions {
        subcommand: sub,
        config: load(args.config.as_ref())?,
        seed: args.seed,
        out: args.out,
        format: args.format,
    };
    run(&opts)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("thermoml: {e}");
            let code = e.exit_code();
            ExitCode::from(code as u8)
        }
    }
}
