//! Command-line frontend: `generate` synthetic data from a CSV, `evaluate`
//! the classification benefit under the cross-validated protocol, and `bench`
//! time-to-target-similarity.
//!
//! Exit codes: 0 success, 2 usage errors, 3 data or precondition errors,
//! 4 internal errors.

mod bench;
mod evaluate;
mod generate;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Errors mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flag combinations and other usage problems (exit 2).
    Usage(String),
    /// Input data or precondition failures (exit 3).
    Data(String),
    /// IO, serialization, and internal failures (exit 4).
    Internal(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => write!(f, "{m}"),
        }
    }
}

impl From<dimso::Error> for CliError {
    fn from(e: dimso::Error) -> CliError {
        if e.is_user_error() {
            CliError::Data(e.to_string())
        } else {
            CliError::Internal(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Internal(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Data(_) => ExitCode::from(3),
            CliError::Internal(_) => ExitCode::from(4),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "dimso",
    version,
    about = "Synthetic tabular data generation by mapping Gaussian noise onto per-class \
             distributions, with evaluation and benchmarking commands"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the generator on a CSV dataset and write a balanced synthetic CSV
    /// in the input's original units.
    Generate(GenerateArgs),
    /// Run the stratified cross-validation protocol: twin classifiers on
    /// real vs synthetic data, balanced accuracy deltas, similarity metrics.
    Evaluate(EvaluateArgs),
    /// Train toward a target MMD, stopping at the first checkpoint that
    /// reaches it; reports epochs and wall time per repeat.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LossArg {
    Rae,
    W,
    Wc,
}

impl LossArg {
    fn as_str(self) -> &'static str {
        match self {
            LossArg::Rae => "rae",
            LossArg::W => "w",
            LossArg::Wc => "wc",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GeneratorArg {
    DimsoRae,
    DimsoW,
    DimsoWc,
    Smote,
    Identity,
}

impl GeneratorArg {
    fn as_str(self) -> &'static str {
        match self {
            GeneratorArg::DimsoRae => "dimso-rae",
            GeneratorArg::DimsoW => "dimso-w",
            GeneratorArg::DimsoWc => "dimso-wc",
            GeneratorArg::Smote => "smote",
            GeneratorArg::Identity => "identity",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ClassifierArg {
    Gnb,
    Mlp,
}

impl ClassifierArg {
    fn as_str(self) -> &'static str {
        match self {
            ClassifierArg::Gnb => "gnb",
            ClassifierArg::Mlp => "mlp",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PipelineArg {
    Raw,
    Pca,
}

impl PipelineArg {
    fn as_str(self) -> &'static str {
        match self {
            PipelineArg::Raw => "raw",
            PipelineArg::Pca => "pca",
        }
    }
}

#[derive(clap::Args)]
struct GenerateArgs {
    /// Input CSV file (required unless --from-manifest is given).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Label column, by header name or 0-based index [default: label].
    #[arg(long)]
    label_col: Option<String>,
    /// Treat the first row as data, not as a header.
    #[arg(long, default_value_t = false)]
    no_header: bool,
    /// Loss driving the optimization.
    #[arg(long, value_enum, default_value_t = LossArg::Rae)]
    loss: LossArg,
    /// Noise dimensionality multiplier.
    #[arg(long, default_value_t = 3.5)]
    features_factor: f64,
    /// Training epochs per class.
    #[arg(long, default_value_t = 2000)]
    epochs: usize,
    /// Adam learning rate.
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Synthetic rows per class.
    #[arg(long, default_value_t = 300)]
    samples_per_class: usize,
    /// Either 'off' or an explained-variance threshold in (0, 1] enabling
    /// generation in PCA component space.
    #[arg(long, default_value = "off")]
    pca_threshold: String,
    /// Seed for all randomness.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output CSV path [default: synthetic.csv].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the fitted pipeline (standardizer, optional PCA basis,
    /// generator model) as versioned JSON.
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Re-run a recorded invocation; other flags except --out/--model-out
    /// are taken from the manifest.
    #[arg(long)]
    from_manifest: Option<PathBuf>,
}

#[derive(clap::Args)]
struct EvaluateArgs {
    /// Input CSV file (required unless --from-manifest is given).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Label column, by header name or 0-based index [default: label].
    #[arg(long)]
    label_col: Option<String>,
    /// Treat the first row as data, not as a header.
    #[arg(long, default_value_t = false)]
    no_header: bool,
    /// Which generator supplies the synthetic training data.
    #[arg(long, value_enum)]
    generator: Option<GeneratorArg>,
    /// Which classifier the protocol trains.
    #[arg(long, value_enum)]
    classifier: Option<ClassifierArg>,
    /// Feature space for the whole protocol.
    #[arg(long, value_enum, default_value_t = PipelineArg::Raw)]
    pipeline: PipelineArg,
    /// Number of stratified folds.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Explained-variance threshold for the PCA pipeline.
    #[arg(long, default_value_t = 0.70)]
    pca_threshold: f64,
    /// Generator training epochs [default: 2000].
    #[arg(long)]
    epochs: Option<usize>,
    /// Synthetic rows per class [default: 300].
    #[arg(long)]
    samples_per_class: Option<usize>,
    /// SMOTE neighbor count [default: 5].
    #[arg(long)]
    smote_neighbors: Option<usize>,
    /// Seed for all randomness.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Directory for report.json, folds.csv, loss_log.csv, manifest.json
    /// [default: eval_out].
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Re-run a recorded invocation; other flags except --out-dir are taken
    /// from the manifest.
    #[arg(long)]
    from_manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ToyArg {
    ClusteredCube,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Input CSV file (alternative to --toy).
    #[arg(long, conflicts_with = "toy")]
    input: Option<PathBuf>,
    /// Label column for --input, by header name or 0-based index
    /// [default: label].
    #[arg(long)]
    label_col: Option<String>,
    /// Treat the first row as data, not as a header.
    #[arg(long, default_value_t = false)]
    no_header: bool,
    /// Built-in toy dataset (alternative to --input).
    #[arg(long, value_enum)]
    toy: Option<ToyArg>,
    /// Toy clusters.
    #[arg(long, default_value_t = 4)]
    clusters: usize,
    /// Toy feature count.
    #[arg(long, default_value_t = 20)]
    features: usize,
    /// Toy sample count.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Stop at the first checkpoint whose MMD is at or below this value.
    #[arg(long)]
    target_mmd: Option<f64>,
    /// Loss driving the optimization.
    #[arg(long, value_enum, default_value_t = LossArg::Rae)]
    loss: LossArg,
    /// Epochs between similarity checkpoints.
    #[arg(long, default_value_t = 10)]
    check_every: usize,
    /// Epoch budget per repeat.
    #[arg(long, default_value_t = 1000)]
    max_epochs: usize,
    /// Number of repeats, each on freshly drawn data when using --toy.
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Synthetic rows to generate [default: the dataset's sample count].
    #[arg(long)]
    samples_per_class: Option<usize>,
    /// Seed for all randomness.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Directory for bench_report.json and manifest.json
    /// [default: bench_out].
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Re-run a recorded invocation; other flags except --out-dir are taken
    /// from the manifest.
    #[arg(long)]
    from_manifest: Option<PathBuf>,
}

/// Mixes a tag into a seed (SplitMix64 finalizer); used for per-repeat
/// streams in the bench command.
pub(crate) fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => generate::run(args),
        Command::Evaluate(args) => evaluate::run(args),
        Command::Bench(args) => bench::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
