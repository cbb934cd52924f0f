use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use modstab::config::{Format, Overrides};
use modstab::{cmd_check_modular, cmd_run, cmd_sweep, EXIT_CONFIG};

/// Stability experiments for the radical functional equation in modular spaces.
#[derive(Parser)]
#[command(name = "modstab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run every cell of a parameter sweep.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Check the modular axioms and Δ₂ estimate for a spec such as `power:p=2` or `exp`.
    CheckModular {
        spec: String,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    n_max: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
    /// Report file (run, check-modular) or output directory (sweep).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

impl From<Flags> for Overrides {
    fn from(f: Flags) -> Self {
        Overrides {
            tol: f.tol,
            n_max: f.n_max,
            seed: f.seed,
            format: f.format,
            out: f.out,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match cli.command {
        Command::Run { config, flags } => cmd_run(&config, &flags.into()),
        Command::Sweep { config, flags } => cmd_sweep(&config, &flags.into()),
        Command::CheckModular { spec, flags } => cmd_check_modular(&spec, &flags.into()),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("modstab: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
