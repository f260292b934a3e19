//! `trunca`: sample, evaluate and analyse right-truncated copulas.
//!
//! Exit codes: 0 on success, 2 for invalid input (flags, model files,
//! truncation points), 3 when sampling or a numerical routine fails.

mod commands;
mod figures;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trunca::Method;

#[derive(Parser)]
#[command(
    name = "trunca",
    version,
    about = "Right-truncated copulas: sampling, evaluation and analytics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the truncated copula C_t and write a CSV with a metadata sidecar.
    Sample(SampleArgs),
    /// Evaluate the model CDF at points or on a grid.
    Cdf(EvalArgs),
    /// Evaluate the truncated copula C_t, with the bisection fallback as a check.
    TruncateEval(TruncEvalArgs),
    /// Tail dependence coefficients of C_t (analytic and/or empirical).
    Taildep(TaildepArgs),
    /// Kendall distribution of C_t, or Kendall's tau of a data file.
    Kendall(KendallArgs),
    /// Write the data behind the sample figures.
    FigureData(FigureArgs),
    /// Compare the fast sampler against the rejection oracle.
    OracleCompare(OracleArgs),
}

#[derive(Args)]
pub struct ModelArgs {
    /// Model specification (JSON, schema "trunca/1").
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Truncation point, e.g. `0.5,0.8`. Defaults to no truncation.
    #[arg(long, value_name = "LIST")]
    pub t: Option<String>,
}

#[derive(Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "auto", value_parser = parse_method)]
    pub method: Method,
    /// Output CSV; written to stdout (without sidecar) when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Write samples of U | U ≤ t on the original scale instead of C_t.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Model specification (JSON, schema "trunca/1").
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Points `u1,u2;u1,u2;…` or a JSON array of arrays.
    #[arg(long, value_name = "POINTS", conflicts_with = "grid")]
    pub u: Option<String>,
    /// Evaluate on the grid {0, 1/k, …, 1}^d instead.
    #[arg(long, value_name = "K")]
    pub grid: Option<usize>,
    /// Write grid values as CSV here instead of JSON on stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct TruncEvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_name = "POINTS", conflicts_with = "grid")]
    pub u: Option<String>,
    #[arg(long, value_name = "K")]
    pub grid: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct TaildepArgs {
    /// Model specification; optional when `--data` is given.
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    #[arg(long, value_name = "LIST")]
    pub t: Option<String>,
    /// Threshold of the empirical estimator.
    #[arg(long, default_value_t = 0.02)]
    pub q: f64,
    /// Also estimate empirically from this many samples of C_t.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Estimate empirically from a bivariate CSV sample.
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
}

#[derive(Args)]
pub struct KendallArgs {
    /// Archimedean model whose truncated Kendall distribution is evaluated.
    #[arg(long, value_name = "PATH", required_unless_present = "data")]
    pub model: Option<PathBuf>,
    #[arg(long, value_name = "LIST")]
    pub t: Option<String>,
    /// Evaluation points of the Kendall distribution, e.g. `0.1,0.5,0.9`.
    #[arg(long, value_name = "LIST")]
    pub u: Option<String>,
    /// Check against the empirical law of C_t(U) from this many samples.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pairwise Kendall's tau of the columns of a CSV sample.
    #[arg(long, value_name = "PATH", conflicts_with = "model")]
    pub data: Option<PathBuf>,
}

#[derive(Args)]
pub struct FigureArgs {
    /// Which figure: mo, mo-cdf, survival-gumbel, survival-gumbel-3d,
    /// nested-clayton, nested-gumbel or all.
    pub figure: String,
    /// Output directory.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "auto", value_parser = parse_method)]
    pub method: Method,
}

#[derive(Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest accepted sup distance between the empirical copulas.
    #[arg(long, default_value_t = 0.015)]
    pub threshold: f64,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: trunca::Error| e.to_string())
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl From<trunca::Error> for CliError {
    fn from(e: trunca::Error) -> Self {
        use trunca::Error as E;
        match e {
            E::TooManyTries { .. } | E::Numeric(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sample(a) => commands::sample(&a),
        Command::Cdf(a) => commands::cdf(&a),
        Command::TruncateEval(a) => commands::truncate_eval(&a),
        Command::Taildep(a) => commands::taildep(&a),
        Command::Kendall(a) => commands::kendall(&a),
        Command::FigureData(a) => figures::figure_data(&a),
        Command::OracleCompare(a) => commands::oracle_compare(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
