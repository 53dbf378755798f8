use bricklayers::cli::{self, Outcome, Overrides};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Simulator and verification harness for totally asymmetric zero-range
/// and bricklayers' deposition dynamics with exponential jump rates.
#[derive(Parser)]
#[command(name = "bricklayers", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump a single-site equilibrium marginal and draw samples from it
    SampleEquilibrium {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicas: Option<u64>,
    },
    /// Run the configured process (or the stabilized window limit)
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicas: Option<u64>,
    },
    /// Run several processes on shared clocks with discrepancy tracking
    Couple {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicas: Option<u64>,
    },
    /// Run verification suites; exit 0 iff all requested suites pass
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicas: Option<u64>,
        /// Suite name; repeatable. Defaults to the config's [verify] list.
        #[arg(long = "suite")]
        suites: Vec<String>,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(outcome) => ExitCode::from(outcome.code() as u8),
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                bricklayers::Error::UnknownSuite(_) | bricklayers::Error::Config(_) => 2,
                _ => 3,
            };
            ExitCode::from(code)
        }
    }
}

fn run(args: Args) -> bricklayers::Result<Outcome> {
    match args.command {
        Command::SampleEquilibrium {
            config,
            out,
            seed,
            replicas,
        } => {
            let cfg = cli::load_config(&config, &Overrides { seed, replicas })?;
            cli::init_threads(cfg.run.threads);
            cli::cmd_sample_equilibrium(&cfg, &out)
        }
        Command::Simulate {
            config,
            out,
            seed,
            replicas,
        } => {
            let cfg = cli::load_config(&config, &Overrides { seed, replicas })?;
            cli::init_threads(cfg.run.threads);
            cli::cmd_simulate(&cfg, &out)
        }
        Command::Couple {
            config,
            out,
            seed,
            replicas,
        } => {
            let cfg = cli::load_config(&config, &Overrides { seed, replicas })?;
            cli::init_threads(cfg.run.threads);
            cli::cmd_couple(&cfg, &out)
        }
        Command::Verify {
            config,
            out,
            seed,
            replicas,
            suites,
        } => {
            let cfg = cli::load_config(&config, &Overrides { seed, replicas })?;
            cli::init_threads(cfg.run.threads);
            cli::cmd_verify(&cfg, &suites, &out)
        }
    }
}
