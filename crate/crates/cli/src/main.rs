use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lyapex_cli::reproduce::{cmd_reproduce, Scale};
use lyapex_cli::verify::cmd_verify;
use lyapex_cli::{cmd_run, CliError};

#[derive(Parser)]
#[command(
    name = "lyapex",
    version,
    about = "Lyapunov spectra with varying stepsizes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write its CSV.
    Run { config: PathBuf },
    /// Run a property suite (gronwall, exterior, linear-oracle, bounds,
    /// weights-identity, conditions, all).
    Verify { suite: String },
    /// Write the CSV bundle and manifest for a figure.
    Reproduce {
        figure: String,
        #[arg(long, default_value = "desk")]
        scale: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { config } => cmd_run(&config),
        Command::Verify { suite } => cmd_verify(&suite),
        Command::Reproduce { figure, scale, out } => {
            let scale: Scale = scale.parse()?;
            cmd_reproduce(&figure, scale, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lyapex: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
