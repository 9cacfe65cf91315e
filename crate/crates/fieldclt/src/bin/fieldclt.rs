use clap::{Parser, Subcommand};
use fieldclt::cli;
use std::path::PathBuf;
use std::process::ExitCode;

/// Simulation and verification laboratory for central limit theorems of
/// additive functionals of stationary random fields.
#[derive(Parser)]
#[command(name = "fieldclt", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Path to the experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report.json / report.csv.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker thread count (0 = default). Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Also emit an SVG plot where the subcommand supports one.
    #[arg(long)]
    svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel norm constants C_p(K) and p_*.
    Constants(Common),
    /// Exact-arithmetic feasibility table for the projection family.
    Hybl(Common),
    /// Cumulant ladder, Kolmogorov distances, and theoretical variances.
    Clt(Common),
    /// Same ladder as `clt`, requiring the log-log rate fits.
    Rate(Common),
    /// Fourth-moment tightness diagnostics over nested dilations.
    Tightness(Common),
    /// Weight-function scaling identity check.
    Weighted(Common),
    /// Approximate-identity mass balance of the Fejer-type kernels.
    Kernelcheck(Common),
}

fn run(sub: cli::Subcommand, common: &Common) -> Result<(), cli::CliError> {
    if common.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(common.threads)
            .build_global()
            .map_err(|e| cli::CliError::Config(format!("thread pool: {e}")))?;
    }
    let text = std::fs::read_to_string(&common.config).map_err(|e| {
        cli::CliError::Config(format!("reading {}: {e}", common.config.display()))
    })?;
    let mut cfg = cli::parse_config(&text).map_err(cli::CliError::Config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let opts = cli::RunOptions {
        out_dir: common.out.clone(),
        emit_svg: common.svg,
    };
    cli::run(sub, &cfg, &opts)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (sub, common) = match &args.command {
        Command::Constants(c) => (cli::Subcommand::Constants, c),
        Command::Hybl(c) => (cli::Subcommand::Hybl, c),
        Command::Clt(c) => (cli::Subcommand::Clt, c),
        Command::Rate(c) => (cli::Subcommand::Rate, c),
        Command::Tightness(c) => (cli::Subcommand::Tightness, c),
        Command::Weighted(c) => (cli::Subcommand::Weighted, c),
        Command::Kernelcheck(c) => (cli::Subcommand::Kernelcheck, c),
    };
    match run(sub, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fieldclt: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
