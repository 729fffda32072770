use clap::{Parser, Subcommand};
use sdiqrng::cli::{self, CertifyPaths, CliError, ExtractPaths, Failure};
use std::path::PathBuf;
use std::process::ExitCode;

/// Energy-bounded semi-device-independent QRNG: simulate, certify, extract.
#[derive(Parser)]
#[command(name = "sdiqrng", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a session and write the round records and monitor trace.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Defaults to `<output>.monitor.csv`.
        #[arg(long)]
        monitor: Option<PathBuf>,
    },
    /// Build the entropy witness for the configured operating point.
    Witness {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the block pipeline over recorded rounds and write the session log.
    Certify {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Defaults to `<records>.monitor.csv`.
        #[arg(long)]
        monitor: Option<PathBuf>,
        #[arg(long)]
        log: PathBuf,
        /// Use a stored witness instead of building one from the config.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Hash the raw bits of passing blocks into the final output.
    Extract {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        seed: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write a test seed file from a keyed ChaCha20 stream.
    GenSeed {
        #[arg(long)]
        bits: u64,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write figure data as CSV.
    Figure {
        /// entropy-vs-energy, strategies, energy-monitor or stability
        name: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

fn run(command: Command) -> Result<String, CliError> {
    match command {
        Command::Simulate { config, output, monitor } => {
            cli::cmd_simulate(&config, &output, monitor.as_deref())
        }
        Command::Witness { config, output } => cli::cmd_witness(&config, &output),
        Command::Certify { records, config, monitor, log, witness } => {
            cli::cmd_certify(&CertifyPaths {
                records: &records,
                config: &config,
                monitor: monitor.as_deref(),
                log: &log,
                witness: witness.as_deref(),
            })
        }
        Command::Extract { records, log, seed, config, output } => {
            cli::cmd_extract(&ExtractPaths {
                records: &records,
                log: &log,
                seed: &seed,
                config: &config,
                output: &output,
            })
        }
        Command::GenSeed { bits, rng_seed, output } => cli::cmd_gen_seed(bits, rng_seed, &output),
        Command::Figure { name, config, output } => cli::cmd_figure(&name, &config, &output),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Failure::Usage.exit_code())
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(args.command) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.failure.exit_code())
        }
    }
}
