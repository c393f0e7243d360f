mod commands;
mod io;
mod plot;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gradcodec::compressors::{OperatorConfig, OperatorKind};
use gradcodec::Error;
use std::path::PathBuf;
use std::process::ExitCode;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Parser)]
#[command(
    name = "gradcodec",
    version,
    about = "Gradient compression codecs, rate-distortion bounds and compressed gradient descent experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress one vector into a GCV1 message file.
    Compress(CompressArgs),
    /// Decode a GCV1 message file back into a vector.
    Decompress(DecompressArgs),
    /// Bits and distortion of an operator over random unit vectors.
    Stats(StatsArgs),
    /// Lower bounds, predicted bit counts and the savings table.
    Bounds(BoundsArgs),
    /// Compressed gradient descent traces for several operators on one problem.
    Bench(BenchArgs),
    /// Iteration inflation over gradient descent across a parameter grid.
    Sweep(SweepArgs),
    /// Run the acceptance checks at reduced counts.
    Selftest(SelftestArgs),
}

#[derive(Args, Clone, Debug)]
pub struct OpArgs {
    /// Operator: dsd, rsd, sc, topk, randsparse, dither, ternary, natural or identity.
    #[arg(long, default_value = "dsd")]
    pub op: OperatorKind,
    /// Sparse dithering variance parameter.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Spherical compression distortion target.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Coordinates kept by topk and randsparse.
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of levels of standard dithering.
    #[arg(long)]
    pub levels: Option<u64>,
    /// Scale an unbiased operator by 1/(1+omega).
    #[arg(long)]
    pub wrap_omega: Option<f64>,
    #[arg(long, env = "GRADCODEC_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

impl OpArgs {
    pub fn config(&self) -> OperatorConfig {
        OperatorConfig {
            kind: self.op,
            nu: self.nu,
            alpha: self.alpha,
            k: self.k,
            levels: self.levels,
            wrap_omega: self.wrap_omega,
            seed: self.seed,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Svg,
    Table,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loss {
    Ridge,
    Logistic,
}

#[derive(Args, Clone, Debug)]
pub struct ProblemArgs {
    /// LIBSVM file, a name listed in --manifest, or `synth:ridge,d=50,n=200,...`.
    #[arg(long, default_value = "synth:ridge")]
    pub dataset: String,
    /// File of `name path` lines used to resolve --dataset.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Loss; defaults to the synthetic kind, or ridge for files.
    #[arg(long)]
    pub loss: Option<Loss>,
    /// Target relative error.
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_iter: u64,
}

#[derive(Args, Debug)]
pub struct CompressArgs {
    /// Whitespace-separated reals.
    pub input: PathBuf,
    #[command(flatten)]
    pub op: OpArgs,
    /// Message index that selects the random stream.
    #[arg(long, default_value_t = 0)]
    pub message: u64,
    /// Output message file; defaults to INPUT.gcv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DecompressArgs {
    pub input: PathBuf,
    /// Operator settings when the message has no sidecar metadata file.
    #[command(flatten)]
    pub op: OpArgs,
    #[arg(long)]
    pub message: Option<u64>,
    /// Output vector file; defaults to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[command(flatten)]
    pub op: OpArgs,
    #[arg(long, default_value_t = 1000)]
    pub d: usize,
    #[arg(long, default_value_t = 200)]
    pub messages: usize,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    /// Distortion or variance parameters, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.25, 0.5])]
    pub alpha: Vec<f64>,
    /// Dimensions, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![10, 100, 1000])]
    pub d: Vec<usize>,
    /// Coordinates kept by random sparsification in the savings table; defaults to d/100.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Operator spec such as `dsd:nu=0.1` or `rsd:nu=0.25,wrap=0.25`; repeatable.
    #[arg(long = "run")]
    pub runs: Vec<String>,
    #[arg(long, env = "GRADCODEC_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output directory for CSV and SVG files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Svg)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// topk, sc, dsd or rsd.
    #[arg(long, default_value = "topk")]
    pub family: String,
    /// Parameter values, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub grid: Vec<f64>,
    /// Seeds averaged per grid value for randomized families.
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    #[arg(long, env = "GRADCODEC_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Svg)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Decode spherical messages with a wrong Golomb-Rice parameter.
    GolombRice,
}

#[derive(Args, Debug)]
pub struct SelftestArgs {
    /// Fraction of the full message and trial counts.
    #[arg(long, default_value_t = 0.1)]
    pub scale: f64,
    /// Criteria to run, comma separated; all by default.
    #[arg(long, value_delimiter = ',')]
    pub criteria: Vec<u8>,
    #[arg(long)]
    pub inject_fault: Option<Fault>,
    #[arg(long, env = "GRADCODEC_SEED")]
    pub seed: Option<u64>,
}

/// Usage error raised after argument parsing.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Usage(pub String);

/// A check or run that completed but did not meet its target.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Validation(pub String);

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => 1,
                Error::Io { .. }
                | Error::Parse { .. }
                | Error::Decode { .. }
                | Error::TruncatedStream { .. }
                | Error::MalformedCode { .. } => 2,
                _ => 3,
            };
        }
        if cause.is::<Usage>() {
            return 1;
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return 2;
        }
        if cause.is::<Validation>() {
            return 3;
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Compress(a) => commands::compress(&a),
        Command::Decompress(a) => commands::decompress(&a),
        Command::Stats(a) => commands::stats(&a),
        Command::Bounds(a) => commands::bounds(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Selftest(a) => commands::selftest(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
