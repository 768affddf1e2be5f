//! `qew` command-line tool: witness and battery runs, visibility scans,
//! proof-game simulation, network checks and oracle campaigns.

mod commands;
mod error;
mod io;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

pub use error::CliError;
pub use commands::scan_csv;
pub use io::format_sig;

#[derive(Debug, Parser)]
#[command(name = "qew", version, about = "Verify entangled states known up to a blind local-phase channel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the nonlinear witness and paradox battery on a state.
    Witness(WitnessArgs),
    /// Critical white-noise visibilities over a range of coherences.
    ScanVisibility(ScanArgs),
    /// Simulate the interactive proof game and verify its transcript.
    Zkp(ZkpArgs),
    /// Build a network state and check every source battery.
    Network(NetworkArgs),
    /// Search for witness values above their separable bounds.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Auto,
    Epr,
    Ghz,
    W,
    Qudit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct ToleranceArgs {
    /// Tolerance for exact and zero contracts and witness bounds.
    #[arg(long, default_value_t = 1e-9)]
    pub tol_eq: f64,
    /// Threshold for nonzero contracts.
    #[arg(long, default_value_t = 1e-6)]
    pub tol_nz: f64,
    /// Population allowed outside the family subspace.
    #[arg(long, default_value_t = 1e-8)]
    pub leakage_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; stdout when absent. Relative paths resolve against
    /// `QEW_OUT_DIR` when it is set.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct WitnessArgs {
    /// State JSON file, or inline JSON.
    #[arg(long)]
    pub state: String,
    /// Blind channel JSON file, or inline JSON.
    #[arg(long)]
    pub channel: Option<String>,
    /// White-noise visibility applied after the channel.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, value_enum, default_value_t = FamilyArg::Auto)]
    pub family: FamilyArg,
    /// Use only the paradox observables (no X...XY companions).
    #[arg(long)]
    pub no_companions: bool,
    #[command(flatten)]
    pub tol: ToleranceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// Coherence range `start:stop:step`, inside [0, 0.5].
    #[arg(long, default_value = "0:0.5:0.01")]
    pub range: String,
    /// Comma-separated subset of `witness,chsh,svetlichny3`.
    #[arg(long, default_value = "witness,chsh,svetlichny3")]
    pub kinds: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ZkpArgs {
    /// Prover strategy JSON file, or inline JSON.
    #[arg(long)]
    pub strategy: String,
    #[arg(long, default_value_t = 10_000)]
    pub rounds: usize,
    #[arg(long)]
    pub seed: u64,
    /// Standard errors used by every cell test.
    #[arg(long, default_value_t = 5.0)]
    pub z: f64,
    /// Where to write the transcript.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct NetworkArgs {
    /// Network JSON file, or inline JSON.
    #[arg(long)]
    pub spec: String,
    /// Blind channel on all network qubits; identity when absent.
    #[arg(long)]
    pub channel: Option<String>,
    #[arg(long)]
    pub no_companions: bool,
    #[command(flatten)]
    pub tol: ToleranceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// One of `epr`, `ghz`, `w`, `qudit`.
    #[arg(long)]
    pub witness: String,
    /// Random states checked against the bound.
    #[arg(long)]
    pub samples: u64,
    #[arg(long)]
    pub seed: u64,
    /// Number of sites for `ghz` and `qudit`.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Local dimension for `qudit`.
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// Pure terms per sampled mixture.
    #[arg(long, default_value_t = 4)]
    pub terms: usize,
    /// Random starts of the maximization search.
    #[arg(long, default_value_t = 2000)]
    pub starts: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Runs one command. Verdicts are part of the written report; only
/// input problems and oracle bound violations produce errors.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Witness(a) => commands::witness(&a),
        Command::ScanVisibility(a) => commands::scan_visibility(&a),
        Command::Zkp(a) => commands::zkp(&a),
        Command::Network(a) => commands::network(&a),
        Command::Oracle(a) => commands::oracle(&a),
    }
}
