use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slcb_core::output::{check_ne, emit_plotdata, format_ne_table, run_experiment};
use slcb_core::{Error, ExperimentConfig};

/// Strategic linear contextual bandit experiments.
#[derive(Parser)]
#[command(name = "slcb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every mechanism and run of a config; writes rounds.csv, summary.json, config_echo.json.
    Run(ExperimentArgs),
    /// Deviation analysis; prints a table and writes ne_report.json.
    CheckNe(ExperimentArgs),
    /// Turn result directories into plot-ready CSVs.
    EmitPlotdata {
        /// Result directories written by `run` (all from the same config).
        #[arg(required = true)]
        results: Vec<PathBuf>,
        /// Output directory; defaults to the first result directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config, then print its fingerprint.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        instrument: bool,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Enables the underreporting and manipulation-bound checks.
    #[arg(long)]
    instrument: bool,
}

/// Failure with its exit status: 1 for bad input, 2 for runtime errors.
struct Failure(u8, String);

fn input(e: Error) -> Failure {
    Failure(1, e.to_string())
}

fn runtime(e: Error) -> Failure {
    match e {
        Error::Invalid { .. } | Error::Parse { .. } | Error::Json(_) => input(e),
        e => Failure(2, e.to_string()),
    }
}

fn load(path: &Path, seed: Option<u64>, instrument: bool) -> Result<ExperimentConfig, Failure> {
    let mut config = ExperimentConfig::load(path).map_err(|e| Failure(1, format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        config.seed = s;
    }
    config.instrument |= instrument;
    Ok(config)
}

fn threads(jobs: Option<usize>) -> usize {
    jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(a) => {
            let config = load(&a.config, a.seed, a.instrument)?;
            let outcome = run_experiment(&config, &a.out, threads(a.jobs)).map_err(runtime)?;
            println!(
                "fingerprint {}: {} episodes written to {}",
                outcome.fingerprint,
                outcome.summary.episodes.len(),
                a.out.display()
            );
            for row in &outcome.summary.aggregate {
                println!(
                    "  {:<20} epoch {:>3}  regret {:>12.3} ± {:<10.3} manipulation {:>12.3}",
                    row.mechanism, row.epoch, row.regret.mean, row.regret.stderr, row.manipulation.mean
                );
            }
        }
        Command::CheckNe(a) => {
            let config = load(&a.config, a.seed, a.instrument)?;
            if config.deviation.is_none() {
                return Err(Failure(1, "invalid configuration: deviation: check-ne needs a deviation section".into()));
            }
            let report = check_ne(&config, &a.out, threads(a.jobs)).map_err(runtime)?;
            println!("fingerprint {}", report.config_fingerprint);
            print!("{}", format_ne_table(&report));
        }
        Command::EmitPlotdata { results, out } => {
            let out = out.unwrap_or_else(|| results[0].clone());
            let files = emit_plotdata(&results, &out).map_err(input)?;
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Validate { config, seed, instrument } => {
            let config = load(&config, seed, instrument)?;
            println!("ok {}", config.fingerprint());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
