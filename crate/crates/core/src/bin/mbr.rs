//! `mbr` — minimum Bayes risk decoding over toy sequence models.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 input data error,
//! 3 exact-oracle infeasible.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mbr_core::harness::{self, Config};
use mbr_core::Error;

#[derive(Parser)]
#[command(name = "mbr", version, about = "Sampling-based minimum Bayes risk decoding toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default 1).
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Directory for output files.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Decode a corpus with a model-backed decoder (map, nbyn, nbys, c2f).
    Decode(RunArgs),
    /// Rerank externally supplied candidate files with MBR.
    Rerank(RunArgs),
    /// Run a diagnostic experiment and write its report JSON.
    Analyze(RunArgs),
    /// Flatten analyze report JSON files into plotting CSVs.
    Plotdata {
        /// Report files produced by `analyze`.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Check a config and every input file it references without running.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(args: &RunArgs) -> Result<Config, Error> {
    let mut config = Config::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.set_master_seed(seed);
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Decode(args) => match load(&args)? {
            Config::Decode(c) => harness::run_decode(&c, &args.out_dir, args.workers),
            _ => Err(Error::Config(
                "decode expects a config with \"kind\": \"decode\"".into(),
            )),
        },
        Command::Rerank(args) => match load(&args)? {
            Config::Rerank(c) => harness::rerank_external(&c, &args.out_dir, args.workers),
            _ => Err(Error::Config(
                "rerank expects a config with \"kind\": \"rerank\"".into(),
            )),
        },
        Command::Analyze(args) => match load(&args)? {
            Config::Analyze(c) => {
                let path = harness::run_analyze(&c, &args.out_dir)?;
                println!("wrote {}", path.display());
                Ok(())
            }
            _ => Err(Error::Config(
                "analyze expects a config with \"kind\": \"analyze\"".into(),
            )),
        },
        Command::Plotdata { reports, out_dir } => {
            for path in harness::emit_plot_data(&reports, &out_dir)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Validate { config } => {
            let config = Config::load(&config)?;
            harness::validate(&config)?;
            println!("ok");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
