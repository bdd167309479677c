use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "hotplug", version, about = "Hotplug coded caching from PDAs and t-designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build an HpPDA bundle from MAN parameters or a t-design.
    Construct(ConstructArgs),
    /// Check a bundle, design file, or PDA grid.
    Verify(VerifyArgs),
    /// Run placement, delivery and decoding on a bundle.
    Simulate(SimulateArgs),
    /// Export memory-rate points and converse bounds as CSV.
    Tradeoff(TradeoffArgs),
    /// List built-in designs.
    Catalog(CatalogArgs),
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    /// MAN construction with -K, -Kp and -t.
    #[arg(long, conflicts_with = "design", required_unless_present = "design")]
    pub man: bool,
    #[arg(short = 'K')]
    pub k: Option<usize>,
    #[arg(long = "kp")]
    pub kp: Option<usize>,
    #[arg(short = 't')]
    pub t: Option<usize>,
    /// Design file or catalog name.
    #[arg(long)]
    pub design: Option<String>,
    /// Copies a_1,a_2,...,a_{t-1}.
    #[arg(long, value_delimiter = ',')]
    pub a: Vec<u64>,
    /// Store the removal set in the bundle.
    #[arg(long)]
    pub improve: bool,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub file: PathBuf,
    /// Check this many random active sets instead of all.
    #[arg(long)]
    pub sampled: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub bundle: PathBuf,
    #[arg(short = 'N', default_value_t = 0)]
    pub n: usize,
    #[arg(long, value_delimiter = ',')]
    pub active: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub demands: Vec<usize>,
    /// Drop the removal set (from the bundle, else the construction's own).
    #[arg(long)]
    pub improve: bool,
    /// Subfile length in bytes.
    #[arg(long, default_value_t = 64)]
    pub len: usize,
    /// Random demand vectors per active set; all when omitted and at most 10^4.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Random active sets; all when omitted.
    #[arg(long)]
    pub active_samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct TradeoffArgs {
    #[arg(short = 'K')]
    pub k: usize,
    #[arg(long = "kp")]
    pub kp: usize,
    #[arg(short = 'N')]
    pub n: usize,
    /// mt, improved-man, baseline, t:<design>, improved-t:<design>,
    /// optimal-v43, optimal-inversive:<q>, cutset, yu.
    #[arg(long, value_delimiter = ',', default_value = "mt,improved-man,baseline,cutset")]
    pub schemes: Vec<String>,
    /// Envelope and bound samples over [0,1].
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Write a gnuplot script reading the CSV.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CatalogArgs {
    /// Print this design in the design text format instead of the listing.
    pub name: Option<String>,
}

/// Accept `-Kp` as a spelling of `--kp`.
fn normalise_args() -> Vec<String> {
    std::env::args()
        .map(|a| match a.strip_prefix("-Kp") {
            Some("") => "--kp".to_string(),
            Some(rest) if rest.starts_with('=') => format!("--kp{rest}"),
            _ => a,
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse_from(normalise_args());
    let result = match cli.command {
        Command::Construct(a) => commands::construct(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Tradeoff(a) => commands::tradeoff(&a),
        Command::Catalog(a) => commands::catalog(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
