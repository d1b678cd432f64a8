//! Command-line front end: library generation, augmentation, training,
//! policy iteration, proving and benchmarking.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iplrl::search::DEFAULT_GAMMA;
use iplrl::valuemodel::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "iplrl", version, about = "Value-guided proof search for intuitionistic propositional logic")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Discount rate of returns and values.
    #[arg(long, global = true, default_value_t = DEFAULT_GAMMA, value_parser = parse_gamma)]
    pub gamma: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a library of random theorems.
    Gen(GenArgs),
    /// Build a labelled dataset from a library.
    Augment(AugmentArgs),
    /// Train a value model on a dataset.
    Train(TrainArgs),
    /// Run approximate policy iteration on a library.
    Api(ApiArgs),
    /// Prove a goal with greedy depth-first search.
    Prove(ProveArgs),
    /// Decide a sequent exhaustively.
    Decide(DecideArgs),
    /// Check a proof certificate.
    Check(CheckArgs),
    /// Benchmark provers on an exam set.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    Desk,
    DeskExam,
    FullTrain,
    FullExam,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t = Preset::Desk)]
    pub preset: Preset,
    /// Number of theorems (defaults to the preset's count, 50 for desk presets).
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub min_length: Option<usize>,
    #[arg(long)]
    pub max_length: Option<usize>,
    #[arg(long)]
    pub min_vars: Option<u32>,
    #[arg(long)]
    pub max_vars: Option<u32>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Sequents the decision procedure may visit per candidate.
    #[arg(long)]
    pub decide_budget: Option<usize>,
    #[arg(long)]
    pub max_attempts: Option<usize>,
    /// Output file; standard output if absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Library file, one goal formula per line.
    #[arg(long)]
    pub library: PathBuf,
    /// Value model defining the policy; the naive greedy policy if absent.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub n_ge2: usize,
    #[arg(long, default_value_t = 100)]
    pub n_eq1: usize,
    #[arg(long, default_value_t = 10_000)]
    pub step_limit: usize,
    /// Without augmentation only the library theorems are labelled.
    #[arg(long)]
    pub no_augmentation: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainOpts {
    #[arg(long, default_value = "gnn-tm", value_parser = parse_kind)]
    pub kind: ModelKind,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 16)]
    pub hidden: usize,
    /// Propagation steps of the graph network.
    #[arg(long, default_value_t = 6)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset file written by `augment`.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub opts: TrainOpts,
    /// Where to write the trained model.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ApiArgs {
    #[arg(long)]
    pub library: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub iterations: usize,
    #[command(flatten)]
    pub opts: TrainOpts,
    #[arg(long, default_value_t = 1000)]
    pub n_ge2: usize,
    #[arg(long, default_value_t = 100)]
    pub n_eq1: usize,
    /// Step limit of labelling rollouts.
    #[arg(long, default_value_t = 10_000)]
    pub step_limit: usize,
    /// Step limit of the rollouts that measure solve rates.
    #[arg(long, default_value_t = 10_000)]
    pub eval_step_limit: usize,
    #[arg(long)]
    pub no_augmentation: bool,
    /// Directory for `model_<i>.txt` files and `api_log.csv`.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Vm,
    Tm,
}

#[derive(Debug, Args)]
pub struct ProveArgs {
    /// Value model guiding the search; the length heuristic if absent.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub step_limit: usize,
    /// Graph format used to encode sequents for a graph model.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Where to write the proof certificate.
    #[arg(long)]
    pub proof_out: Option<PathBuf>,
    /// File whose first non-comment line is the goal formula or sequent.
    pub goal_file: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecideArgs {
    /// Formula or sequent (`A, B |- C`).
    pub goal: String,
    #[arg(long, default_value_t = 10_000_000)]
    pub budget: usize,
    /// Where to write the certificate; standard output if absent.
    #[arg(long)]
    pub proof_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Certificate file.
    pub proof: PathBuf,
    /// Expected goal; the certificate's own root if absent.
    #[arg(long)]
    pub goal: Option<String>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Exam file, one goal formula per line.
    #[arg(long)]
    pub exam: PathBuf,
    /// Comma-separated provers: `pi0`, `ID=MODEL_FILE`, or `ID` for `--model`.
    #[arg(long, value_delimiter = ',', default_value = "pi0")]
    pub provers: Vec<String>,
    /// Model file for provers given without a path.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Comma-separated wall-clock limits in seconds.
    #[arg(long, value_delimiter = ',')]
    pub time_limits: Vec<f64>,
    /// Comma-separated step limits (deterministic mode).
    #[arg(long, value_delimiter = ',')]
    pub step_limits: Vec<usize>,
    /// Directory for the CSV files.
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn parse_gamma(s: &str) -> Result<f64, String> {
    let g: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if g > 0.0 && g < 1.0 {
        Ok(g)
    } else {
        Err(format!("{g} is not in (0, 1)"))
    }
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse()
}

/// Exit status of a command that ran to completion.
pub enum Verdict {
    Success,
    Negative,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match commands::run(&cli) {
        Ok(Verdict::Success) => ExitCode::SUCCESS,
        Ok(Verdict::Negative) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
