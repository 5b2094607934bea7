use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "semtune",
    version,
    about = "Semantic-distance analyses for knowledge fine-tuning"
)]
pub struct Cli {
    /// TOML run configuration. Flags override values from this file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for output files.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Worker threads (default: available cores). Outputs do not depend on it.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    /// Seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Old-vs-target and new-vs-target distances per item.
    Distance(DataArgs),
    /// Accuracy, generality and locality.
    Score(DatasetArg),
    /// Per-item relative deviation and deviation proportions.
    Deviation(DataArgs),
    /// Statistics per old-vs-target distance bin.
    BinReport(BinArgs),
    /// Greedy curation of a working set against a pool.
    Filter(FilterArgs),
    /// Per-example loss weights.
    Reweight(ReweightArgs),
    /// Projection norms of W onto singular subspaces.
    SvdProject(SvdArgs),
    /// Principal components of stacked feature rows.
    Pca(PcaArgs),
    /// Check that input files parse and reference each other consistently.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct DatasetArg {
    /// Dataset (JSON Lines).
    #[arg(long, value_name = "FILE")]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset (JSON Lines).
    #[arg(long, value_name = "FILE")]
    pub dataset: Option<PathBuf>,

    /// Answer embeddings (SEMB).
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stat {
    Accuracy,
    Deviation,
}

#[derive(Debug, Args)]
pub struct BinArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long)]
    pub bin_width: Option<f64>,

    /// Statistics to compute per bin; pass an empty value for counts only.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub stats: Option<Vec<Stat>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DispersionArg {
    Variance,
    Stddev,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    None,
    Random,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Candidate pool (JSON Lines).
    #[arg(long, value_name = "FILE")]
    pub pool: Option<PathBuf>,

    /// Weight of the dispersion term.
    #[arg(long)]
    pub lambda: Option<f64>,

    #[arg(long)]
    pub mean_min: Option<f64>,

    #[arg(long)]
    pub mean_max: Option<f64>,

    #[arg(long)]
    pub replace_fraction: Option<f64>,

    #[arg(long, value_enum)]
    pub dispersion: Option<DispersionArg>,

    /// Also run the random-replacement baseline.
    #[arg(long, value_enum)]
    pub baseline: Option<BaselineArg>,
}

#[derive(Debug, Args)]
pub struct ReweightArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SvdArgs {
    /// Weight matrix W (SMAT).
    #[arg(long, value_name = "FILE")]
    pub w: Option<PathBuf>,

    /// Update matrix dW (SMAT).
    #[arg(long, value_name = "FILE")]
    pub dw: Option<PathBuf>,

    #[arg(long)]
    pub rank: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    /// Feature rows (SMAT).
    #[arg(long, value_name = "FILE")]
    pub features: Option<PathBuf>,

    #[arg(long)]
    pub components: Option<usize>,

    /// Also write the projections as SMAT.
    #[arg(long)]
    pub projections: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Extra SMAT files to check; may be repeated.
    #[arg(long = "matrix", value_name = "FILE")]
    pub matrices: Vec<PathBuf>,
}
