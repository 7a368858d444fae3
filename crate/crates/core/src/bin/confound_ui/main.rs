//! Command-line interface: dataset estimation, uncertainty intervals,
//! sensitivity thresholds, and Monte Carlo studies.

mod commands;
mod ingest;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use confound_ui::sim::{Design, Overlap};
use confound_ui::{Estimand, EstimatorKind, DEFAULT_GRID};

#[derive(Parser)]
#[command(
    name = "confound-ui",
    version,
    about = "Treatment-effect estimation with uncertainty intervals for unobserved confounding",
    after_help = "The CONFOUND_UI_THREADS environment variable caps the worker threads used by simulate."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Point estimates with standard errors and confidence intervals
    Estimate(EstimateArgs),
    /// Identification and uncertainty intervals under rho bounds
    Ui(UiArgs),
    /// Smallest rho bound at which an effect is indistinguishable from zero
    Sensitivity(SensitivityArgs),
    /// Monte Carlo study on a built-in generating design
    Simulate(SimulateArgs),
}

/// Flags shared by the commands that read a dataset.
#[derive(Args)]
pub struct DataArgs {
    /// Input CSV file with a header row
    #[arg(long)]
    pub input: PathBuf,

    /// Outcome column name
    #[arg(long)]
    pub outcome: String,

    /// Treatment column name; values must be 0 or 1
    #[arg(long)]
    pub treatment: String,

    /// Covariate column names, comma separated; an intercept is added
    #[arg(long, value_delimiter = ',', required = true)]
    pub covariates: Vec<String>,

    /// Treatment-model covariates when richer than the outcome model
    #[arg(long, value_delimiter = ',')]
    pub treatment_covariates: Option<Vec<String>>,

    /// Clip fitted propensities into [EPS, 1 - EPS]
    #[arg(long, value_name = "EPS")]
    pub clip_propensity: Option<f64>,

    /// Use the large-sample variance forms
    #[arg(long)]
    pub large_sample_var: bool,

    /// Restrict output to one estimand
    #[arg(long, value_enum)]
    pub estimand: Option<EstimandArg>,

    /// Restrict output to one estimator family
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorArg>,

    /// Two-sided miscoverage level for the intervals
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    /// Output format
    #[arg(long, value_enum, default_value_t = FormatArg::Human)]
    pub format: FormatArg,
}

#[derive(Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Bounds on rho0 as "low,high"; enables identification and
    /// uncertainty intervals
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    pub rho0: Option<Interval>,

    /// Bounds on rho1 as "low,high"; defaults to the rho0 bounds
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    pub rho1: Option<Interval>,

    /// Grid points per rho axis
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
}

#[derive(Args)]
pub struct UiArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Bounds on rho0 as "low,high"
    #[arg(long, value_parser = parse_interval, required_unless_present = "rho1", allow_hyphen_values = true)]
    pub rho0: Option<Interval>,

    /// Bounds on rho1 as "low,high"; defaults to the rho0 bounds
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    pub rho1: Option<Interval>,

    /// Grid points per rho axis
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
}

#[derive(Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Plausibility bound on |rho| the threshold is judged against
    #[arg(long, default_value_t = 0.01)]
    pub plausible_rho: f64,

    /// Search over [0, r] instead of [-r, r]
    #[arg(long)]
    pub one_sided: bool,

    /// Bisection resolution for the threshold
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Generating design: A, B, C, or D
    #[arg(long)]
    pub design: Design,

    /// Propensity imbalance variant
    #[arg(long, default_value = "low")]
    pub overlap: Overlap,

    /// Sample size per replication
    #[arg(long)]
    pub n: usize,

    /// Number of replications
    #[arg(long)]
    pub reps: usize,

    /// Generating correlation between the treatment and control-outcome errors
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub rho0: f64,

    /// Generating correlation for the treated-outcome errors; defaults to rho0
    #[arg(long, allow_hyphen_values = true)]
    pub rho1: Option<f64>,

    /// Uncertainty-interval rho bounds "low,high" applied to both
    /// correlations; repeatable
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    pub ui: Vec<Interval>,

    /// Two-sided miscoverage level for the intervals
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    /// Grid points per rho axis
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,

    /// Study seed; replication r draws from stream r
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Directory for the CSV and JSON artifacts
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,

    /// Artifact file name prefix
    #[arg(long, default_value = "study")]
    pub prefix: String,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimandArg {
    Att,
    Ate,
}

impl EstimandArg {
    fn matches(self, estimand: Estimand) -> bool {
        matches!(
            (self, estimand),
            (EstimandArg::Att, Estimand::Att) | (EstimandArg::Ate, Estimand::Ate)
        )
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Or,
    Dr,
}

impl EstimatorArg {
    fn matches(self, estimator: EstimatorKind) -> bool {
        matches!(
            (self, estimator),
            (EstimatorArg::Or, EstimatorKind::OutcomeRegression)
                | (EstimatorArg::Dr, EstimatorKind::DoublyRobust)
        )
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Human,
    Json,
    Csv,
}

impl FormatArg {
    pub fn label(self) -> &'static str {
        match self {
            FormatArg::Human => "human",
            FormatArg::Json => "json",
            FormatArg::Csv => "csv",
        }
    }
}

/// A "low,high" pair, validated against [-1, 1] later by the library.
#[derive(Clone, Copy)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

fn parse_interval(s: &str) -> Result<Interval, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected \"low,high\", got '{s}'"));
    }
    let parse = |p: &str| {
        p.trim()
            .parse::<f64>()
            .map_err(|_| format!("could not parse '{}' as a number", p.trim()))
    };
    Ok(Interval { low: parse(parts[0])?, high: parse(parts[1])? })
}

pub fn combos(
    estimand: Option<EstimandArg>,
    estimator: Option<EstimatorArg>,
) -> Vec<(Estimand, EstimatorKind)> {
    confound_ui::sim::ESTIMATOR_COMBOS
        .iter()
        .copied()
        .filter(|&(ed, ek)| {
            estimand.is_none_or(|f| f.matches(ed)) && estimator.is_none_or(|f| f.matches(ek))
        })
        .collect()
}

fn main() -> ExitCode {
    // Die quietly instead of panicking when a downstream reader closes the
    // pipe, as `confound-ui ... | head` does.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(args) => commands::estimate(&args),
        Command::Ui(args) => commands::ui(&args),
        Command::Sensitivity(args) => commands::sensitivity(&args),
        Command::Simulate(args) => commands::simulate(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
