use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hpr_cli::runner::{execute, load_spec};
use hpr_cli::spec::{ExperimentKind, Overrides};

const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Hypercomplex phase retrieval experiments.
#[derive(Parser)]
#[command(name = "hpr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Success rate over a grid of oversampling ratios.
    PhaseTransition(Common),
    /// Reconstruction error over oversampling ratio and SNR.
    NoiseSweep(Common),
    /// Success rate of coded Fourier sensing over code size and ratio.
    CodingSweep(Common),
    /// Patch-wise recovery of an RGB or eight-band image.
    RecoverImage(Common),
    /// Structural property table of the Cayley-Dickson levels.
    AlgebraCheck(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment spec; built-in defaults when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trials per grid cell.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (all cores by default).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (kind, common) = match cli.command {
        Command::PhaseTransition(c) => (ExperimentKind::PhaseTransition, c),
        Command::NoiseSweep(c) => (ExperimentKind::NoiseSweep, c),
        Command::CodingSweep(c) => (ExperimentKind::CodingSweep, c),
        Command::RecoverImage(c) => (ExperimentKind::RecoverImage, c),
        Command::AlgebraCheck(c) => (ExperimentKind::AlgebraCheck, c),
    };
    let overrides = Overrides {
        seed: common.seed,
        out: common.out,
        trials: common.trials,
        threads: common.threads,
    };
    let outcome = load_spec(kind, common.spec.as_deref(), &overrides).and_then(|spec| execute(&spec));
    match outcome {
        Ok(o) => {
            print!("{}", o.summary);
            println!("results in {}", o.out_dir.display());
            if o.violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                for v in &o.violations {
                    eprintln!("property violated: {v}");
                }
                ExitCode::from(EXIT_VIOLATION)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
