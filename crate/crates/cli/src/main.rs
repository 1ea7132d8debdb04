mod commands;
mod model_file;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use scsvm::data::Format;
use scsvm::verify::Check;
use scsvm::EvalSchedule;

/// Exit status when training stopped before the duality gap reached ε.
pub const EXIT_NOT_CERTIFIED: u8 = 3;
/// Exit status when a verification check failed.
pub const EXIT_VERIFY_FAILED: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "scsvm",
    version,
    about = "Linear SVMs with per-feature sign constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model and optionally write a convergence trace.
    Train(TrainArgs),
    /// Score examples with a trained model.
    Predict(PredictArgs),
    /// Build positives-first pairwise features from a similarity matrix.
    Pairwise(PairwiseArgs),
    /// Held-out AUC with cross-validated λ.
    Eval(EvalArgs),
    /// Check the solvers against the brute-force oracles.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    /// `.csv` files are dense, everything else sparse.
    Auto,
    Sparse,
    Dense,
}

impl FormatArg {
    pub fn resolve(self, path: &std::path::Path) -> Format {
        match self {
            FormatArg::Auto => Format::from_path(path),
            FormatArg::Sparse => Format::Sparse,
            FormatArg::Dense => Format::DenseCsv,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Fw,
    Pg,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Training or test examples (sparse `label idx:val ...` or dense CSV).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    pub format: FormatArg,
    /// Number of features (sparse input only; inferred when omitted).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Labels are 0/1 instead of ±1.
    #[arg(long)]
    pub zero_one_labels: bool,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct LambdaArgs {
    /// Regularization strength λ.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// λ given as C/n for the training-set size n.
    #[arg(long)]
    pub lambda_over_n: Option<f64>,
}

impl LambdaArgs {
    pub fn resolve(&self, n: usize) -> Result<f64> {
        let lambda = match (self.lambda, self.lambda_over_n) {
            (Some(l), _) => l,
            (None, Some(c)) => c / n as f64,
            (None, None) => bail!("one of --lambda or --lambda-over-n is required"),
        };
        if !(lambda > 0.0 && lambda.is_finite()) {
            bail!("λ must be positive and finite, got {lambda}");
        }
        Ok(lambda)
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Sign-mask file: one `<feature index> <+|->` per line, 0-based.
    #[arg(long)]
    pub signs: Option<PathBuf>,
    #[command(flatten)]
    pub lambda: LambdaArgs,
    #[arg(long, value_enum, default_value_t = SolverArg::Fw)]
    pub solver: SolverArg,
    /// Target duality gap (fw).
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// Iterations recorded in the trace: `log`, `all` or `every:K`
    /// (default: `log` for pg, `all` for fw).
    #[arg(long, value_parser = parse_schedule)]
    pub eval_schedule: Option<EvalSchedule>,
    /// Write the convergence trace here (CSV).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the trained model here (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Recorded in the output; both solvers are deterministic full-batch methods.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scale every example to unit Euclidean norm.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Scores, one per line (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Append an `# auc=` line computed from the data's labels.
    #[arg(long)]
    pub auc: bool,
}

#[derive(Args, Debug)]
pub struct PairwiseArgs {
    /// Square similarity matrix, comma-separated.
    #[arg(long)]
    pub similarity: PathBuf,
    /// One label per sequence.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub zero_one_labels: bool,
    /// Output dataset.
    #[arg(long)]
    pub out_data: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    pub format: FormatArg,
    /// Output sign-mask file.
    #[arg(long)]
    pub out_signs: PathBuf,
    /// Output id map: line j holds the original index of example j.
    #[arg(long)]
    pub out_ids: PathBuf,
    /// Scale every generated example to unit norm.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PairwiseMode {
    Constrained,
    Unconstrained,
    Both,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Examples for the generic protocol.
    #[arg(long, conflicts_with = "similarity")]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    pub format: FormatArg,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, requires = "data")]
    pub signs: Option<PathBuf>,
    #[arg(long)]
    pub normalize: bool,
    /// Similarity matrix for the pairwise protocol.
    #[arg(long, requires = "labels")]
    pub similarity: Option<PathBuf>,
    #[arg(long, requires = "similarity")]
    pub labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PairwiseMode::Both)]
    pub mode: PairwiseMode,
    #[arg(long)]
    pub zero_one_labels: bool,
    /// Candidate λ values (comma-separated).
    #[arg(long, value_delimiter = ',', conflicts_with = "lambda_over_n")]
    pub lambda: Vec<f64>,
    /// Candidate λ·n values; n is the training-split size.
    #[arg(long, value_delimiter = ',', default_value = "1e-6,1e-4,1e-2,1,1e2")]
    pub lambda_over_n: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0.5)]
    pub train_fraction: f64,
    #[arg(long, value_enum, default_value_t = SolverArg::Fw)]
    pub solver: SolverArg,
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// Independent random splits, seeded `seed, seed+1, ...`.
    #[arg(long, default_value_t = 1)]
    pub repeats: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON report (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Checks to run (repeatable; all when omitted).
    #[arg(long = "check", value_parser = parse_check)]
    pub checks: Vec<Check>,
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    /// λ for the rate and bound checks.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// With --lambda, report the iteration bound for this ε.
    #[arg(long, requires = "lambda")]
    pub epsilon: Option<f64>,
    /// Emit JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

fn parse_schedule(s: &str) -> Result<EvalSchedule, String> {
    match s {
        "log" => Ok(EvalSchedule::Log),
        "all" => Ok(EvalSchedule::All),
        _ => match s.strip_prefix("every:").map(str::parse::<usize>) {
            Some(Ok(k)) if k > 0 => Ok(EvalSchedule::Every(k)),
            _ => Err(format!("expected log, all or every:K, got {s:?}")),
        },
    }
}

fn parse_check(s: &str) -> Result<Check, String> {
    s.parse()
}

fn init_threads() -> Result<()> {
    let Some(v) = std::env::var_os("SCSVM_THREADS") else {
        return Ok(());
    };
    let s = v.to_string_lossy();
    let threads: usize = s
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .with_context(|| format!("SCSVM_THREADS must be a positive integer, got {s:?}"))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("cannot configure the thread pool")?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    init_threads()?;
    match cli.command {
        Command::Train(a) => commands::train(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Pairwise(a) => commands::pairwise(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Verify(a) => commands::verify(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
