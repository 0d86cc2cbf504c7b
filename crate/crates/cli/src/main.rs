mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::LazyLock;

use clap::error::ErrorKind;
use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;

use crate::config::CliError;

static VERSION: LazyLock<String> =
    LazyLock::new(|| format!("{} (format {})", env!("CARGO_PKG_VERSION"), sergm::FORMAT_VERSION));

/// Signed exponential random graph models with latent blocks.
#[derive(Parser)]
#[command(name = "sergm", version = VERSION.as_str())]
struct Cli {
    /// JSON file with command options; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the resolved configuration here instead of next to the outputs
    #[arg(long, global = true)]
    record: Option<PathBuf>,

    /// More log output on stderr (repeatable)
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a network given blocks and coefficients
    Simulate(SimulateArgs),
    /// Recover blocks and estimate coefficients
    Fit(FitArgs),
    /// Pool estimates over partitions drawn from membership probabilities
    Uq(UqArgs),
    /// Simulation-based goodness of fit
    Gof(GofArgs),
    /// Yule's phi between two block assignments, printed to stdout
    Phi(PhiArgs),
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    /// Model specification (JSON)
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Coefficients (JSON with `within` and `between`)
    #[arg(long)]
    coeffs: Option<PathBuf>,
    /// Block assignment (TSV)
    #[arg(long)]
    blocks: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    /// Output edge list (TSV)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct FitArgs {
    /// Edge list (TSV)
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Number of blocks for the variational fit
    #[arg(long)]
    k: Option<usize>,
    /// Known block assignment; skips the variational fit
    #[arg(long)]
    blocks: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated networks for the sandwich covariance; 0 keeps the inverse information
    #[arg(long)]
    godambe_r: Option<usize>,
    /// Also compute the AIC
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    aic: Option<bool>,
    #[arg(long)]
    aic_draws: Option<usize>,
    /// Newton iterations
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    mm_max_iter: Option<usize>,
    #[arg(long)]
    mm_tol: Option<f64>,
    /// spectral or random
    #[arg(long)]
    init: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct UqArgs {
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Membership probabilities (CSV); without it a variational fit with `--k` blocks is run
    #[arg(long)]
    alpha: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    /// Number of sampled partitions
    #[arg(long = "T", visible_alias = "t")]
    t: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    godambe_r: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    aic: Option<bool>,
    #[arg(long)]
    aic_draws: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    mm_max_iter: Option<usize>,
    #[arg(long)]
    mm_tol: Option<f64>,
    #[arg(long)]
    init: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct GofArgs {
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    blocks: Option<PathBuf>,
    #[arg(long)]
    coeffs: Option<PathBuf>,
    /// Simulated networks
    #[arg(long)]
    n_sims: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    /// Also run leave-one-block-out validation
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    loo: Option<bool>,
    /// Simulations of each held-out block
    #[arg(long)]
    loo_sims: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct PhiArgs {
    /// Reference block assignment (TSV)
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Estimated block assignment (TSV)
    #[arg(long)]
    estimate: Option<PathBuf>,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let file = cli.config.as_deref();
    let record = cli.record.as_deref();
    match &cli.command {
        Command::Simulate(a) => commands::simulate(config::resolve(file, a)?, record),
        Command::Fit(a) => commands::fit(config::resolve(file, a)?, record),
        Command::Uq(a) => commands::uq(config::resolve(file, a)?, record),
        Command::Gof(a) => commands::gof(config::resolve(file, a)?, record),
        Command::Phi(a) => commands::phi(config::resolve(file, a)?, record),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Missing { command, option }) => {
            let mut cmd = Cli::command();
            cmd.build();
            let sub = cmd.find_subcommand_mut(command).expect("known subcommand");
            let _ = sub
                .error(
                    ErrorKind::MissingRequiredArgument,
                    format!("`{option}` must be given as a flag or in the config file"),
                )
                .print();
            ExitCode::from(2)
        }
        Err(e) => {
            let code = e.exit_code() as u8;
            if let CliError::Validation(m) | CliError::Runtime(m) = e {
                eprintln!("error: {m}");
            }
            ExitCode::from(code)
        }
    }
}
