use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shockadj_cli::{cmd_all, cmd_check_ibc, cmd_error_representation, cmd_solve, CliError, Context, ExperimentConfig};

#[derive(Parser)]
#[command(name = "shockadj", version, about = "Viscous shock adjoint experiments")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides run.output_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Debug-level logging.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve the viscous primal and adjoint along the ε-sweep.
    Solve,
    /// Interior-condition residual along the ε-sweep.
    CheckIbc,
    /// Error-representation budget along the ν-sweep.
    ErrorRepresentation,
    /// solve, check-ibc and error-representation in order.
    All,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let config = ExperimentConfig::load(path)?;
    let mut ctx = Context::new(config, cli.out.clone())?;
    match cli.command {
        Command::Solve => cmd_solve(&mut ctx),
        Command::CheckIbc => cmd_check_ibc(&mut ctx),
        Command::ErrorRepresentation => cmd_error_representation(&mut ctx),
        Command::All => cmd_all(&mut ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shockadj: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
