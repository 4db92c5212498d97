use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "cpamm",
    version,
    about = "Constant-product AMM replay, generation, arbitrage and property checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replay a JSON-lines trace and print the final state.
    Replay(ReplayArgs),
    /// Generate a random valid trace as JSON lines.
    Gen(GenArgs),
    /// Solve the optimal arbitrage swap on one pool.
    Arb(ArbArgs),
    /// Check state invariants on a trace or on generated traces.
    Check(CheckArgs),
    /// Run the economic property campaign on generated traces.
    Lemmas(LemmasArgs),
}

/// Flags mirroring the generator configuration. Flags override the file.
#[derive(Debug, Args, Clone, Default)]
pub struct GenFlags {
    /// Generator configuration as JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub accounts: Option<u64>,
    #[arg(long)]
    pub tokens: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Trace file: initial state, then one transaction per line.
    pub trace: PathBuf,
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    /// Print the gain of this account for every step (needs --oracle).
    #[arg(long, value_name = "ACCOUNT")]
    pub gain: Option<u64>,
    /// Print every intermediate state, one per line.
    #[arg(long)]
    pub all: bool,
    /// Add decimal approximations with this many digits.
    #[arg(long, value_name = "N")]
    pub decimals: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub gen: GenFlags,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ArbArgs {
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long)]
    pub oracle: PathBuf,
    /// Pool as a token pair, e.g. `0-1`.
    #[arg(long)]
    pub pool: String,
    #[arg(long)]
    pub account: u64,
    #[arg(long, value_name = "N")]
    pub decimals: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Trace file; traces are generated from the flags when absent.
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub gen: GenFlags,
    /// Number of generated traces.
    #[arg(long, default_value_t = 20)]
    pub traces: usize,
    /// Also run the economic properties under this oracle (needs --oracle).
    #[arg(long, requires = "oracle", conflicts_with = "trace")]
    pub lemmas: bool,
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LemmasArgs {
    #[command(flatten)]
    pub gen: GenFlags,
    #[arg(long, default_value_t = 20)]
    pub traces: usize,
    /// Swaps sampled per trace.
    #[arg(long, default_value_t = 5)]
    pub swaps: usize,
    /// Grid points used by the optimality checks.
    #[arg(long, default_value_t = 1000)]
    pub grid: usize,
    /// Fixed oracle; random oracles are drawn when absent.
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
}
