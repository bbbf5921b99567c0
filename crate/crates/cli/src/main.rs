use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use curveflow_cli::{cmd_audit, cmd_check, cmd_run, cmd_sweep, config::DEFAULTS_TOML};

#[derive(Parser)]
#[command(name = "curveflow", version, about = "Willmore-Helfrich flow of open curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flow described by a TOML config.
    Run {
        config: Option<PathBuf>,
        /// Print the defaults table and exit.
        #[arg(long)]
        print_defaults: bool,
    },
    /// Audit a trajectory directory written by `run`.
    Check { dir: PathBuf },
    /// Run an inequality audit described by a TOML spec.
    Audit { spec: PathBuf },
    /// Run every config matching a glob pattern in parallel.
    Sweep { pattern: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { print_defaults: true, .. } => {
            print!("{DEFAULTS_TOML}");
            0
        }
        Command::Run { config: Some(c), .. } => cmd_run(&c),
        Command::Run { config: None, .. } => {
            eprintln!("error: a config file is required");
            4
        }
        Command::Check { dir } => cmd_check(&dir),
        Command::Audit { spec } => cmd_audit(&spec),
        Command::Sweep { pattern } => cmd_sweep(&pattern),
    };
    ExitCode::from(code)
}
