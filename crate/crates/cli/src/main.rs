mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::TypedValueParser as _;
use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

/// Distances between crystal structures and the uniqueness / novelty
/// metrics built on them.
#[derive(Debug, Parser)]
#[command(name = "xtalmet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads for fingerprinting and pairwise evaluation.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    workers: Option<u16>,

    /// Log filter (error, warn, info, debug, trace); RUST_LOG overrides it.
    #[arg(long, global = true, default_value = "info")]
    log_level: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Precompute fingerprints (amd or magpie) into an embedding cache.
    Fingerprint(FingerprintArgs),
    /// Uniqueness of a sample set.
    Uniqueness(MetricArgs),
    /// Novelty of a sample set against a training set.
    Novelty(NoveltyArgs),
    /// Full pairwise distance matrix.
    Pairwise(PairwiseArgs),
    /// Pareto frontier over metric reports.
    Pareto(ParetoArgs),
    /// Discrete uniqueness under seeded shuffles of the generation order.
    ShuffleCheck(ShuffleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DistanceName {
    Smat,
    Comp,
    Wyckoff,
    Magpie,
    Amd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DenominatorArg {
    Full,
    Filtered,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[arg(long, value_enum)]
    pub distance: DistanceName,
    /// Neighbours per site for amd.
    #[arg(long, default_value_t = xtalmet::amd::DEFAULT_K)]
    pub k: usize,
    /// Fractional lattice-length tolerance for smat.
    #[arg(long, default_value_t = 0.2)]
    pub ltol: f64,
    /// Site tolerance for smat, in units of (V/m)^(1/3).
    #[arg(long, default_value_t = 0.3)]
    pub stol: f64,
    /// Lattice-angle tolerance for smat, in degrees.
    #[arg(long, default_value_t = 5.0)]
    pub angle_tol: f64,
    /// Elemental property table (CSV) for magpie instead of the built-in one.
    #[arg(long)]
    pub property_table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScreenArgs {
    /// Drop samples with e_hull above this value (eV/atom).
    #[arg(long)]
    pub filter_ehull: Option<f64>,
    /// Denominator after screening.
    #[arg(long, value_enum, default_value = "full")]
    pub denominator: DenominatorArg,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct FingerprintArgs {
    /// Sample set (JSONL, one structure per line).
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub distance: DistanceArgs,
    /// Cache file to write; defaults to a file in XTALMET_CACHE_DIR.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long, env = "XTALMET_CACHE_DIR", hide_env_values = true)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Model label in the report; defaults to the input file stem.
    #[arg(long)]
    pub model: Option<String>,
    #[command(flatten)]
    pub distance: DistanceArgs,
    #[command(flatten)]
    pub screen: ScreenArgs,
    /// Embedding cache for the samples: read when present, written when not.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long, env = "XTALMET_CACHE_DIR", hide_env_values = true)]
    pub cache_dir: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct NoveltyArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    /// Training set (JSONL); never screened.
    #[arg(long, value_parser = clap::builder::OsStringValueParser::new().map(PathBuf::from))]
    pub train: PathBuf,
}

#[derive(Debug, Args)]
pub struct PairwiseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub distance: DistanceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ParetoArgs {
    /// Metric report files (JSON), as written by `uniqueness` / `novelty`.
    #[arg(long = "input", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Emit the model comparison table (rows per metric and distance,
    /// columns per model) instead of the frontier listing.
    #[arg(long)]
    pub table: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ShuffleArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub distance: DistanceArgs,
    #[command(flatten)]
    pub screen: ScreenArgs,
    /// Number of shuffles; seeds are 0..seed-count.
    #[arg(long, default_value_t = 5)]
    pub seed_count: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        pool = pool.num_threads(usize::from(n));
    }
    let pool = pool.build().map_err(|e| CliError::Internal(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Fingerprint(a) => commands::fingerprint(&a),
        Command::Uniqueness(a) => commands::uniqueness(&a),
        Command::Novelty(a) => commands::novelty(&a),
        Command::Pairwise(a) => commands::pairwise(&a),
        Command::Pareto(a) => commands::pareto(&a),
        Command::ShuffleCheck(a) => commands::shuffle_check(&a),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log_level).parse_default_env().init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
