use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use psfourier_cli::commands::{self, RunOptions};
use psfourier_cli::config::ExperimentConfig;
use psfourier_cli::CliError;

#[derive(Parser)]
#[command(name = "pslab", version, about = "Patterson-Sullivan measure experiments")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = rayon default).
    #[arg(long, global = true, env = "PSLAB_THREADS")]
    threads: Option<usize>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    svg: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the ping-pong certificate of a group file.
    Validate {
        /// Group file; defaults to the config's `group`.
        group: Option<PathBuf>,
    },
    /// Critical exponent from truncated Poincare series.
    Delta,
    /// Build the atomic Patterson-Sullivan approximation.
    Measure,
    /// Fourier decay scan, L2 averages and exceptional sets.
    Fourier,
    /// Affine non-concentration profile.
    Nonconc,
    /// Round-trip and linearization checks of the holonomy formulas.
    Holonomy {
        #[arg(long)]
        trials: Option<usize>,
        /// Swap in the wrongly signed A-part formula (negative control).
        #[arg(long)]
        inject_sign_bug: bool,
    },
}

fn setup_threads(threads: Option<usize>) -> Result<(), CliError> {
    let Some(n) = threads else { return Ok(()) };
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("cannot configure {n} threads: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    if n > 1 {
        eprintln!("pslab: built without the `parallel` feature, ignoring --threads {n}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<String, CliError> {
    setup_threads(cli.threads)?;
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.out = Some(o);
    }
    let opts = RunOptions {
        out: cfg.out.clone().unwrap_or_else(|| PathBuf::from("pslab-out")),
        svg: cli.svg,
    };
    match cli.command {
        Command::Validate { group } => {
            let path = match group {
                Some(g) => g,
                None => cfg.group_path()?.to_path_buf(),
            };
            commands::cmd_validate(&cfg, &path, &opts)
        }
        Command::Delta => commands::cmd_delta(&cfg, &opts),
        Command::Measure => commands::cmd_measure(&cfg, &opts),
        Command::Fourier => commands::cmd_fourier(&cfg, &opts),
        Command::Nonconc => commands::cmd_nonconc(&cfg, &opts),
        Command::Holonomy {
            trials,
            inject_sign_bug,
        } => {
            if let Some(t) = trials {
                cfg.holonomy.trials = t;
            }
            cfg.holonomy.inject_sign_bug |= inject_sign_bug;
            commands::cmd_holonomy(&cfg, &opts)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("pslab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
