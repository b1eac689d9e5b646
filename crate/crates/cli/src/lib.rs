//! Command-line front end for `lmkit-core`: reads CSV files, fits and
//! compares models, writes diagnostics, and renders reports as text or JSON.
//!
//! Exit codes: 0 success, 2 usage or formula errors, 3 data and IO errors,
//! 4 optimizer failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod error;
pub mod parallel;
pub mod plot;
pub mod report;
pub mod writeup;

pub use error::CliError;
use report::Format;

#[derive(Debug, Parser)]
#[command(name = "lmkit", version, about = "Linear and linear mixed-effects models from CSV files")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model and print its summary.
    Fit(FitArgs),
    /// Likelihood ratio test of two nested mixed models (both fitted by ML).
    Compare(CompareArgs),
    /// Write residual, Q-Q, histogram, collinearity and influence files.
    Diagnose(DiagnoseArgs),
    /// Column inventory, missing cells and optional group summaries.
    Describe(DescribeArgs),
    /// Pairs of standard-normal samples, for calibrating the eye.
    Simulate(SimulateArgs),
    /// A methods paragraph for a nested comparison.
    Writeup(WriteupArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// Mixed model when the formula has random terms, OLS otherwise.
    Auto,
    Lm,
    Lmer,
}

#[derive(Debug, Clone, Copy, Default, Args)]
pub struct Method {
    /// Restricted maximum likelihood (the default for mixed models).
    #[arg(long, conflicts_with = "ml")]
    pub reml: bool,
    /// Maximum likelihood.
    #[arg(long)]
    pub ml: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub formula: String,
    #[command(flatten)]
    pub method: Method,
    #[arg(long, value_enum, default_value_t = ModelKind::Auto)]
    pub model: ModelKind,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub null: String,
    #[arg(long)]
    pub full: String,
    /// Accepted but ignored: comparisons always use ML.
    #[arg(long)]
    pub reml: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub formula: String,
    #[command(flatten)]
    pub method: Method,
    #[arg(long, value_enum, default_value_t = ModelKind::Auto)]
    pub model: ModelKind,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write an SVG next to each plot CSV.
    #[arg(long)]
    pub svg: bool,
    /// Fixed effect to refit leave-one-out (mixed models; repeatable).
    #[arg(long = "loo-coef", value_name = "LABEL")]
    pub loo_coef: Vec<String>,
    /// Histogram bins (default: Sturges).
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, default_value_t = 0.8)]
    pub r_threshold: f64,
    #[arg(long, default_value_t = 5.0)]
    pub vif_threshold: f64,
    /// Influence flag when |dfbeta| reaches this fraction of |coefficient|.
    #[arg(long, default_value_t = 0.5)]
    pub influence_fraction: f64,
    /// Worker threads for refits (default: available parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DescribeArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// `RESPONSE by F1,F2` (or `RESPONSE F1,F2`): five-number summaries per cell.
    #[arg(long, num_args = 1..=3, value_names = ["RESPONSE", "by", "FACTORS"])]
    pub group: Option<Vec<String>>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: bool,
}

fn key_value(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok((k.to_string(), v.to_string())),
        _ => Err(format!("expected NAME=TEXT, got `{s}`")),
    }
}

#[derive(Debug, Args)]
pub struct WriteupArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub null: String,
    #[arg(long)]
    pub full: String,
    /// Coefficient label of the tested effect, e.g. `attitudepol`.
    #[arg(long)]
    pub effect: String,
    /// Display name for a grouping factor, e.g. `scenario=item`.
    #[arg(long, value_parser = key_value)]
    pub alias: Vec<(String, String)>,
    /// Display name for a variable, e.g. `attitude=politeness`.
    #[arg(long, value_parser = key_value)]
    pub name: Vec<(String, String)>,
    /// Unit of the response, e.g. `Hz`.
    #[arg(long)]
    pub unit: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Reports go to `out`, warnings and errors to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return e.exit_code();
        }
    };
    let mut io = commands::Io { out, err };
    let result = match &cli.command {
        Command::Fit(a) => commands::fit(a, &mut io),
        Command::Compare(a) => commands::compare(a, &mut io),
        Command::Diagnose(a) => commands::diagnose(a, &mut io),
        Command::Describe(a) => commands::describe(a, &mut io),
        Command::Simulate(a) => commands::simulate(a, &mut io),
        Command::Writeup(a) => commands::writeup(a, &mut io),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e}");
            e.exit_code()
        }
    }
}
