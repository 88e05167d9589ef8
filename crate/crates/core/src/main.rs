use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ramsey_sched::report::{cmd_compare, cmd_kpe_check, cmd_mi_surface, cmd_simulate, cmd_validate_alpha, CommandOutcome};
use ramsey_sched::Error;

#[derive(Parser)]
#[command(name = "ramsey-sched", version, about = "Adaptive Ramsey measurement scheduling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mutual information of one measurement over exposure time, per coherence time.
    MiSurface {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Ensemble comparison of the scheduling policies.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides `master_seed` from the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Single-policy ensemble with per-trial trajectories.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check the binomial alpha series against quadrature.
    ValidateAlpha {
        #[arg(long, default_value_t = 32)]
        j_max: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare the KPE schedule with the myopic choice on a diffuse prior.
    KpeCheck {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::MiSurface { config, out } => cmd_mi_surface(config.as_deref(), out),
        Command::Compare { config, out, seed } => cmd_compare(config.as_deref(), out, *seed),
        Command::Simulate { config, out, seed } => cmd_simulate(config.as_deref(), out, *seed),
        Command::ValidateAlpha { j_max, out } => cmd_validate_alpha(*j_max, out),
        Command::KpeCheck { config, out } => cmd_kpe_check(config.as_deref(), out),
    };
    match result {
        Ok(CommandOutcome { passed, messages, artifacts }) => {
            for m in &messages {
                if passed {
                    println!("{m}");
                } else {
                    eprintln!("{m}");
                }
            }
            for a in &artifacts {
                println!("wrote {}", a.display());
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("validation failed");
                ExitCode::from(1)
            }
        }
        Err(e @ (Error::Config { .. } | Error::InvalidParameter { .. } | Error::Io { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
