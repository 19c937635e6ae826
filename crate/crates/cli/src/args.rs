use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "panel-coreset", version, about = "Coresets for regression on panel data")]
pub struct Cli {
    /// Seed for every random stage.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic panel plus a `.truth` sidecar.
    Gen(GenArgs),
    /// Build a coreset from a dataset CSV.
    Coreset(CoresetArgs),
    /// Compare objectives on full data and a coreset.
    Eval(EvalArgs),
    /// Fit GLSE parameters on full data or a coreset.
    Solve(SolveArgs),
    /// Run the empirical-error benchmark.
    Bench(BenchArgs),
    /// Emit the adversarial lower-bound instance and its certificates.
    Lowerbound(LowerboundArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dist {
    Gaussian,
    Cauchy,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of individuals.
    #[arg(long = "N", alias = "n", default_value_t = 500)]
    pub n: usize,
    /// Number of time periods.
    #[arg(long = "T", alias = "t", default_value_t = 500)]
    pub t: usize,
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = 0.2)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = Dist::Gaussian)]
    pub dist: Dist,
    /// Innovation multiplier (0 gives noiseless outcomes).
    #[arg(long, default_value_t = 1.0)]
    pub noise_scale: f64,
    /// Do not pin the last feature to 1.
    #[arg(long)]
    pub no_intercept: bool,
    /// Dataset path; the sidecar goes next to it with a `.truth` suffix.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Cglse,
    CglseK,
    Uniform,
    Caratheodory,
}

#[derive(Debug, Args)]
pub struct CoresetArgs {
    /// Dataset CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Cglse)]
    pub method: Method,
    #[arg(long, default_value_t = 0.3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.2)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    /// Parameter tuples (cglse-k only; default 2).
    #[arg(long)]
    pub k: Option<usize>,
    /// Draw count (individual count for cglse-k, pair count for uniform).
    #[arg(long)]
    pub size: Option<usize>,
    /// Per-individual draw count for the second cglse-k stage.
    #[arg(long)]
    pub period_size: Option<usize>,
    /// Multiplier on the sample-size formula.
    #[arg(long, default_value_t = 1.0)]
    pub fl_constant: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Coreset CSV to compare against the full data.
    #[arg(long)]
    pub coreset: Option<PathBuf>,
    /// Comma-separated β; with --rho evaluates one query.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rho: Option<Vec<f64>>,
    /// Random queries to evaluate when no β is given.
    #[arg(long, default_value_t = 10)]
    pub queries: usize,
    #[arg(long, default_value_t = 0.2)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    /// Evaluate GLSE_k with this many random tuples per query.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Fit on this coreset instead of the full data.
    #[arg(long)]
    pub coreset: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5")]
    pub epsilons: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub queries: usize,
    /// Comma-separated construction seeds (default: the global seed).
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Keep per-query errors in the report.
    #[arg(long)]
    pub raw: bool,
    #[arg(long, value_enum, default_value_t = Format::Markdown)]
    pub format: Format,
    #[arg(long, default_value_t = 0.2)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Benchmark GLSE_k with this many tuples.
    #[arg(long)]
    pub k: Option<usize>,
    /// Pinned coreset draw count.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub period_size: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub fl_constant: f64,
    /// Time IRLS fits instead of query evaluation.
    #[arg(long)]
    pub solve: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LowerboundArgs {
    /// Number of individuals (1 to 15).
    #[arg(long = "N", alias = "n", default_value_t = 10)]
    pub n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
