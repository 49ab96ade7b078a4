//! adeqboot: adequate-bootstrap confidence intervals from the command
//! line. See README for input formats and examples.

mod commands;
mod input;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub struct CliError {
    message: String,
    exit_code: i32,
}

impl CliError {
    pub fn run(msg: impl Into<String>) -> Self {
        CliError {
            message: msg.into(),
            exit_code: 1,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError {
            message: msg.into(),
            exit_code: 2,
        }
    }
}

impl From<adeqboot_core::Error> for CliError {
    fn from(e: adeqboot_core::Error) -> Self {
        match e {
            adeqboot_core::Error::InvalidConfig(_) => CliError::config(e.to_string()),
            _ => CliError::run(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::run(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "adeqboot",
    about = "Adequate-bootstrap confidence intervals for misspecified models",
    version
)]
struct Cli {
    /// Worker threads (0 = all cores). Mirrors ADEQBOOT_THREADS; outputs
    /// do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum InputFormat {
    /// One real value per line (optional header line).
    Values,
    /// Rows `lower,upper,count`; `inf`/`-inf` allowed at the ends.
    Grouped,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModelArg {
    /// Normal with known scale; tracks the mean.
    NormalMean,
    /// Normal with known mean; tracks the scale.
    NormalSigma,
    /// Log-normal; tracks mu, sigma and the tail quantile (VaR).
    Lognormal,
    /// Type-1 Pareto on individual data; tracks the exponent.
    Pareto,
    /// Type-1 Pareto on grouped data; tracks the exponent.
    ParetoGrouped,
    /// Known-mean normal fit with a likelihood-ratio adequacy test against
    /// the stepwise sampling-bias alternative.
    SamplingBias,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    /// Resample with replacement (bootstrap).
    Bootstrap,
    /// Resample without replacement (subsample).
    Subsample,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SizeMethodArg {
    Isotonic,
    Parametric,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ScaleArg {
    /// 100 datasets of 2000 points.
    Desk,
    /// 1000 datasets of 20000 points, the published scale.
    Paper,
}

/// Engine options shared by the analysis commands.
#[derive(Args, Clone, Debug)]
pub struct EngineArgs {
    /// Size of the model-adequacy test.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Coverage of the reported intervals.
    #[arg(long, default_value_t = 0.95)]
    pub coverage: f64,
    /// Bootstrap replicates behind each interval.
    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,
    /// Rejection probability defining the adequate size.
    #[arg(long, default_value_t = 0.5)]
    pub target_power: f64,
    #[arg(long, value_enum, default_value_t = SizeMethodArg::Isotonic)]
    pub size_method: SizeMethodArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Bootstrap)]
    pub mode: ModeArg,
    /// Classes for Pearson adequacy tests on individual data.
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    /// Trial-schedule grid step (default: data-size dependent).
    #[arg(long)]
    pub stride: Option<usize>,
    /// RNG seed; drawn from entropy and recorded in the output if omitted.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Adequate-bootstrap intervals for a model fitted to a data file.
    Adequate(commands::AdequateArgs),
    /// Value-at-Risk intervals for a price series under a log-normal fit.
    Var(commands::VarArgs),
    /// Theoretical coverage grid of the F-based formula.
    CoverageTable(commands::CoverageTableArgs),
    /// Closed-form sampling-bias coverage and eigenvalue coefficients.
    SamplingBiasTheory(commands::SamplingBiasTheoryArgs),
    /// Simulation studies emitting study reports and plot data.
    Simulate(commands::SimulateArgs),
}

fn main() {
    let cli = Cli::parse();

    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("ADEQBOOT_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    if threads > 0 {
        // outputs are reduced by index, so the pool size is speed-only
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let result = match cli.command {
        Command::Adequate(args) => commands::cmd_adequate(args),
        Command::Var(args) => commands::cmd_var(args),
        Command::CoverageTable(args) => commands::cmd_coverage_table(args),
        Command::SamplingBiasTheory(args) => commands::cmd_sampling_bias_theory(args),
        Command::Simulate(args) => commands::cmd_simulate(args),
    };

    if let Err(e) = result {
        eprintln!("error: {}", e.message);
        std::process::exit(e.exit_code);
    }
}

/// Entropy seed for runs that did not pin one.
pub fn draw_seed() -> u64 {
    use std::time::{SystemTime, UNIX_EPOCH};
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    (nanos as u64) ^ ((nanos >> 64) as u64) ^ ((std::process::id() as u64) << 32)
}
