use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use netiss_cli::{CliError, Job, Outcome};

#[derive(Parser)]
#[command(name = "netiss", version, about = "Certify input-to-state stability of interconnected networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON job configuration.
    #[arg(long)]
    config: PathBuf,
    /// Job seed; every random stream is derived from it.
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check Assumption 1, the uniform small-gain condition and the MBI property.
    GainsCheck(Common),
    /// Simulate the network on its working window.
    Simulate(Common),
    /// Build and validate a non-uniform ISS certificate.
    Certify(Common),
    /// Estimate band limsups and check the small-gain inequality on them.
    #[command(name = "trace-theorem1")]
    TraceTheorem1(Common),
    /// Restrict to a subset of indices and certify the restriction.
    Subnetwork(Common),
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let (common, cmd): (&Common, fn(&Job) -> Result<Outcome, CliError>) = match &cli.command {
        Command::GainsCheck(c) => (c, netiss_cli::cmd_gains_check),
        Command::Simulate(c) => (c, netiss_cli::cmd_simulate),
        Command::Certify(c) => (c, netiss_cli::cmd_certify),
        Command::TraceTheorem1(c) => (c, netiss_cli::cmd_trace_theorem1),
        Command::Subnetwork(c) => (c, netiss_cli::cmd_subnetwork),
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))?;
    }
    let job = Job::load(&common.config, common.seed)?;
    let outcome = cmd(&job)?;
    outcome.commit(&common.out)?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            if outcome.passed {
                println!("{}", outcome.message);
            } else {
                eprintln!("{}", outcome.message);
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("netiss: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
