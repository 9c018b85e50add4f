use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use depnet_core::deb822::RelationKind;
use depnet_core::graph::{AlternativesPolicy, VirtualPolicy};
use depnet_core::Direction;

#[derive(Debug, Parser)]
#[command(
    name = "depnet",
    version,
    about = "Debian dependency networks and their saturated Zipf degree distributions"
)]
pub struct Cli {
    /// Where downloaded indices are kept.
    #[arg(long, global = true, env = "DEPNET_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,

    /// Archive mirror base URL.
    #[arg(long, global = true, env = "DEPNET_MIRROR", default_value = depnet_core::ingestion::DEFAULT_MIRROR)]
    pub mirror: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download (or reuse) a release's Packages index and print its path.
    Fetch(FetchArgs),
    /// Build a graph from an index file and write its degree histogram.
    Degrees(DegreesArgs),
    /// Fit the saturation model to an `x,phi` histogram.
    Fit(FitArgs),
    /// Tabulate the out-degree node count over time.
    Evolve(EvolveArgs),
    /// Run the whole pipeline over several releases.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    pub release: String,
    #[arg(long, default_value = "amd64")]
    pub arch: String,
    #[arg(long, default_value = "main")]
    pub component: String,
    /// Re-download even when cached.
    #[arg(long)]
    pub force: bool,
    /// Fail instead of downloading on a cache miss.
    #[arg(long)]
    pub offline: bool,
    /// Expected SHA-256 of the compressed index.
    #[arg(long)]
    pub sha256: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    In,
    Out,
    Conflict,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::In => Direction::In,
            DirectionArg::Out => Direction::Out,
            DirectionArg::Conflict => Direction::Conflict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RelationArg {
    Depends,
    PreDepends,
    Recommends,
    Suggests,
}

impl From<RelationArg> for RelationKind {
    fn from(r: RelationArg) -> Self {
        match r {
            RelationArg::Depends => RelationKind::Depends,
            RelationArg::PreDepends => RelationKind::PreDepends,
            RelationArg::Recommends => RelationKind::Recommends,
            RelationArg::Suggests => RelationKind::Suggests,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlternativesArg {
    First,
    All,
}

impl From<AlternativesArg> for AlternativesPolicy {
    fn from(a: AlternativesArg) -> Self {
        match a {
            AlternativesArg::First => AlternativesPolicy::First,
            AlternativesArg::All => AlternativesPolicy::All,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VirtualArg {
    Providers,
    Drop,
}

impl From<VirtualArg> for VirtualPolicy {
    fn from(v: VirtualArg) -> Self {
        match v {
            VirtualArg::Providers => VirtualPolicy::Providers,
            VirtualArg::Drop => VirtualPolicy::Drop,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Relation fields that count as dependencies.
    #[arg(long, value_delimiter = ',', default_values = ["depends", "pre-depends"])]
    pub relations: Vec<RelationArg>,
    #[arg(long, value_enum, default_value = "first")]
    pub alternatives: AlternativesArg,
    #[arg(long, value_enum, default_value = "providers")]
    pub virtuals: VirtualArg,
}

#[derive(Debug, Args)]
pub struct DegreesArgs {
    /// Packages index, gzip-compressed or plain.
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub direction: DirectionArg,
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Histogram CSV to write.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PinArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Pin mu (default -1).
    #[arg(long, allow_negative_numbers = true, conflicts_with = "mu_free")]
    pub mu: Option<f64>,
    /// Fit mu as well. Experimental.
    #[arg(long)]
    pub mu_free: bool,
    #[arg(long, allow_negative_numbers = true)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Histogram CSV with header `x,phi`.
    pub input: PathBuf,
    #[command(flatten)]
    pub pins: PinArgs,
    #[arg(long)]
    pub x_min: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub multistart: usize,
    /// Text report path; a JSON sidecar is written next to it.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// Start from a published parameter set (e.g. etch-out).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Largest link count in the network.
    #[arg(long)]
    pub x_m: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Comma-separated times.
    #[arg(long, value_delimiter = ',', conflicts_with = "t_range")]
    pub t: Vec<f64>,
    /// `start:stop:step`, inclusive of stop.
    #[arg(long)]
    pub t_range: Option<String>,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Also write phi(x, t) at these x values.
    #[arg(long, value_delimiter = ',')]
    pub slice_x: Vec<f64>,
    /// Where the slices go (default: `<output>.slices.csv`).
    #[arg(long)]
    pub slices_output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, value_delimiter = ',', default_values = ["etch", "lenny", "squeeze"])]
    pub releases: Vec<String>,
    #[arg(long, default_value = "amd64")]
    pub arch: String,
    #[arg(long, default_value = "main")]
    pub component: String,
    /// Use cached indices only.
    #[arg(long)]
    pub offline: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}
