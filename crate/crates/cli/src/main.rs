//! `obscert` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 verification failed,
//! 4 internal error. Failures print a JSON object on stderr.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::{Ctx, Outcome, PlotArgs};
use config::RunConfig;

const EXIT_CONFIG: u8 = 2;
const EXIT_FAILED: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(name = "obscert", version, about = "Verify observational properties of stochastic systems")]
struct Cli {
    /// Run configuration (TOML, or JSON by extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile the property formula to a DFA and dump it.
    Compile {
        /// Formula text, instead of the configured property.
        #[arg(long)]
        formula: Option<String>,
    },
    /// Sample trajectories and write them as CSV.
    Simulate {
        /// Initial state, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
    },
    /// Monte Carlo satisfaction probability over a scan of initial states.
    Estimate,
    /// Grid dynamic programming and the table certificate.
    Dp,
    /// Train a network certificate.
    Train,
    /// Check a certificate on the dense grid.
    Validate {
        #[arg(long)]
        cert: Option<PathBuf>,
    },
    /// Lower (or upper) probability bound of a certificate.
    Bound {
        #[arg(long)]
        cert: Option<PathBuf>,
    },
    /// Validation and bound against the threshold, with a verdict.
    Report {
        #[arg(long)]
        cert: Option<PathBuf>,
    },
    /// CSV slice of a value table or certificate at fixed automaton state and time.
    Plotdata {
        #[arg(long, conflicts_with = "cert")]
        table: Option<PathBuf>,
        #[arg(long)]
        cert: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        t: usize,
        /// Automaton state (default: the initial state).
        #[arg(long)]
        q: Option<usize>,
        /// Grid points per dimension for certificate slices.
        #[arg(long, default_value_t = 101)]
        per_dim: usize,
    },
}

enum Failure {
    Core(obscert::Error),
    Usage(String),
}

impl From<obscert::Error> for Failure {
    fn from(e: obscert::Error) -> Self {
        Failure::Core(e)
    }
}

fn context(cli: &Cli) -> Result<Ctx, Failure> {
    let path = cli.config.as_deref().ok_or_else(|| Failure::Usage("this command needs --config".into()))?;
    let mut cfg = RunConfig::load(path)?;
    cfg.apply_overrides(cli.seed, cli.out.as_deref());
    Ok(Ctx::new(cfg)?)
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("--threads: {e}")))?;
    }
    Ok(match &cli.command {
        Command::Compile { formula: Some(f) } => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            commands::compile_text(f, &out)?
        }
        Command::Compile { formula: None } => commands::compile_config(&context(cli)?)?,
        Command::Simulate { x0 } => commands::simulate_cmd(&context(cli)?, x0.clone())?,
        Command::Estimate => commands::estimate_cmd(&context(cli)?)?,
        Command::Dp => commands::dp_cmd(&context(cli)?)?,
        Command::Train => commands::train_cmd(&context(cli)?)?,
        Command::Validate { cert } => commands::validate_cmd(&context(cli)?, cert.as_deref())?,
        Command::Bound { cert } => commands::bound_cmd(&context(cli)?, cert.as_deref())?,
        Command::Report { cert } => commands::report_cmd(&context(cli)?, cert.as_deref())?,
        Command::Plotdata { table, cert, t, q, per_dim } => {
            let args = PlotArgs { table: table.clone(), cert: cert.clone(), t: *t, q: *q, per_dim: *per_dim };
            commands::plotdata_cmd(&context(cli)?, &args)?
        }
    })
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message, "exit_code": code }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome.summary).unwrap_or_default());
            if outcome.failed {
                ExitCode::from(EXIT_FAILED)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(Failure::Usage(m)) => fail("config", m, EXIT_CONFIG),
        Err(Failure::Core(e)) if e.is_config() || matches!(e, obscert::Error::Compile(_)) => {
            fail("config", e.to_string(), EXIT_CONFIG)
        }
        Err(Failure::Core(e)) => fail("internal", e.to_string(), EXIT_INTERNAL),
    }
}
