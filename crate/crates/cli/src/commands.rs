//! Command implementations.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use adeqboot_core::engine::{
    adequate_bootstrap, adequate_bootstrap_with, standard_bootstrap, AdequateResult, EngineConfig,
    LrTester, Resampling, SizeMethod,
};
use adeqboot_core::models::{
    nonparametric_percentile_ci, Data, LogNormal, NormalKnownMean, NormalKnownVar, Pareto1,
    SamplingBias,
};
use adeqboot_core::sim::{
    emit_llr_qq, run_contamination, run_sampling_bias, ContaminationScenario, SamplingBiasScenario,
};
use adeqboot_core::theory::{
    coverage_table_tsv, sampling_bias_coverage, sampling_bias_eigen_coefficients,
};

use crate::input;
use crate::output::emit;
use crate::{
    draw_seed, CliError, EngineArgs, InputFormat, ModeArg, ModelArg, ScaleArg, SizeMethodArg,
};

impl EngineArgs {
    fn to_config(&self) -> EngineConfig {
        EngineConfig {
            adequacy_alpha: self.alpha,
            target_power: self.target_power,
            ci_coverage: self.coverage,
            replicates: self.replicates,
            resampling: match self.mode {
                ModeArg::Bootstrap => Resampling::WithReplacement,
                ModeArg::Subsample => Resampling::WithoutReplacement,
            },
            size_method: match self.size_method {
                SizeMethodArg::Isotonic => SizeMethod::Isotonic,
                SizeMethodArg::Parametric => SizeMethod::Parametric,
            },
            stride: self.stride,
            seed: self.seed.unwrap_or_else(draw_seed),
            classes: self.classes,
            ..EngineConfig::default()
        }
    }
}

fn read_input(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::run(format!("cannot read {}: {e}", path.display())))
}

#[derive(Args, Debug)]
pub struct AdequateArgs {
    /// Input data file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Values)]
    format: InputFormat,
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Pareto lower limit (and truncation point for any model).
    #[arg(long)]
    lower_limit: Option<f64>,
    /// Known scale for normal-mean (default: sample standard deviation).
    #[arg(long)]
    known_sigma: Option<f64>,
    /// Known mean for normal-sigma and sampling-bias.
    #[arg(long, default_value_t = 0.0)]
    known_mean: f64,
    /// VaR level tracked by the lognormal model.
    #[arg(long, default_value_t = 0.99)]
    var_level: f64,
    /// Interior class boundaries for sampling-bias, comma separated
    /// (default: equiprobable standard-normal quantiles from --classes).
    #[arg(long)]
    boundaries: Option<String>,
    #[command(flatten)]
    engine: EngineArgs,
    /// Output prefix; writes PREFIX.json, PREFIX.power.tsv,
    /// PREFIX.trials.tsv, PREFIX.replicates.tsv. Prints JSON to stdout
    /// when omitted.
    #[arg(long)]
    out: Option<String>,
}

fn load_data(args: &AdequateArgs) -> Result<Data, CliError> {
    let text = read_input(&args.input)?;
    match args.format {
        InputFormat::Values => {
            let mut values = input::parse_values(&text)?;
            if let Some(limit) = args.lower_limit {
                values = input::truncate_values(values, limit)?;
            }
            Ok(Data::Individual(input::to_sample(values)?))
        }
        InputFormat::Grouped => {
            let mut grouped = input::parse_grouped(&text)?;
            if let Some(limit) = args.lower_limit {
                grouped = grouped.truncate_below(limit)?;
            }
            Ok(Data::Grouped(grouped))
        }
    }
}

fn emit_adequate(result: &AdequateResult, data: &Data, out: Option<&str>) -> Result<(), CliError> {
    let mut artifacts = vec![(".json", result.to_json())];
    if let Some(curve) = &result.power_curve {
        artifacts.push((".power.tsv", curve.knots_tsv()));
        artifacts.push((".trials.tsv", curve.trials_tsv()));
    }
    artifacts.push((".replicates.tsv", result.replicates_tsv()));
    if let Data::Grouped(g) = data {
        // the classes actually analyzed, after truncation
        artifacts.push((".grouped.tsv", input::format_grouped(g)));
    }
    emit(out, &artifacts)
}

pub fn cmd_adequate(args: AdequateArgs) -> Result<(), CliError> {
    let data = load_data(&args)?;
    let config = args.engine.to_config();
    config.validate().map_err(CliError::from)?;

    let result = match args.model {
        ModelArg::NormalMean => {
            let sigma = match args.known_sigma {
                Some(s) => s,
                None => {
                    let s = data.as_sample().map_err(CliError::from)?;
                    let mean = s.mean();
                    let var = s
                        .values()
                        .iter()
                        .map(|&x| (x - mean) * (x - mean))
                        .sum::<f64>()
                        / s.len() as f64;
                    var.sqrt()
                }
            };
            let family = NormalKnownVar::new(sigma).map_err(CliError::from)?;
            adequate_bootstrap(&data, &family, &config)?
        }
        ModelArg::NormalSigma => {
            let family = NormalKnownMean::new(args.known_mean);
            adequate_bootstrap(&data, &family, &config)?
        }
        ModelArg::Lognormal => {
            let family = LogNormal::var_level(args.var_level).map_err(CliError::from)?;
            adequate_bootstrap(&data, &family, &config)?
        }
        ModelArg::Pareto | ModelArg::ParetoGrouped => {
            let eta = match (args.lower_limit, &data) {
                (Some(limit), _) => limit,
                (None, Data::Individual(s)) => {
                    s.values().iter().cloned().fold(f64::INFINITY, f64::min)
                }
                (None, Data::Grouped(g)) => g.boundaries()[0],
            };
            let family = Pareto1::new(eta).map_err(CliError::from)?;
            adequate_bootstrap(&data, &family, &config)?
        }
        ModelArg::SamplingBias => {
            let boundaries = sampling_bias_boundaries_from(&args, config.classes)?;
            let family = NormalKnownMean::new(args.known_mean);
            let tester = LrTester {
                alt: SamplingBias::new(boundaries).map_err(CliError::from)?,
            };
            adequate_bootstrap_with(&data, &family, &tester, &config)?
        }
    };
    emit_adequate(&result, &data, args.out.as_deref())
}

fn sampling_bias_boundaries_from(
    args: &AdequateArgs,
    classes: usize,
) -> Result<Vec<f64>, CliError> {
    match &args.boundaries {
        Some(spec) => {
            let mut interior = Vec::new();
            for token in spec.split(',') {
                interior.push(
                    token
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::config(format!("bad boundary '{token}'")))?,
                );
            }
            let mut b = vec![f64::NEG_INFINITY];
            b.extend(interior);
            b.push(f64::INFINITY);
            Ok(b)
        }
        None => adeqboot_core::theory::sampling_bias_boundaries(classes).map_err(CliError::from),
    }
}

#[derive(Args, Debug)]
pub struct VarArgs {
    /// Price series, one closing price per line.
    #[arg(long)]
    input: PathBuf,
    /// Gains are price[t] / price[t - lag] over non-overlapping windows.
    #[arg(long, default_value_t = 1)]
    lag: usize,
    /// VaR level (0.99 tracks the 1st percentile of gains).
    #[arg(long, default_value_t = 0.99)]
    level: f64,
    #[command(flatten)]
    engine: EngineArgs,
    /// Output prefix; writes PREFIX.json (plus power/trial TSVs).
    #[arg(long)]
    out: Option<String>,
}

pub fn cmd_var(args: VarArgs) -> Result<(), CliError> {
    let text = read_input(&args.input)?;
    let prices = input::parse_values(&text)?;
    let gains = input::gains_from_prices(&prices, args.lag)?;
    let sample = input::to_sample(gains)?;
    let n = sample.len();
    let config = args.engine.to_config();
    config.validate().map_err(CliError::from)?;

    let family = LogNormal::var_level(args.level).map_err(CliError::from)?;
    let var_name = family.var_name().to_string();
    let data = Data::Individual(sample.clone());

    let adequate = adequate_bootstrap(&data, &family, &config)?;
    let standard = standard_bootstrap(&data, &family, &config)?;
    let q = 1.0 - args.level;
    let nonparametric = nonparametric_percentile_ci(&sample, q, config.ci_coverage);

    let interval_json = |r: &AdequateResult| {
        let iv = r.interval_for(&var_name).expect("tracked param");
        json!({ "lower": iv.lower, "upper": iv.upper })
    };
    let (np_json, np_error) = match nonparametric {
        Ok((lo, hi)) => (json!({ "lower": lo, "upper": hi }), serde_json::Value::Null),
        Err(e) => (serde_json::Value::Null, json!(e.to_string())),
    };
    let doc = json!({
        "n_gains": n,
        "lag": args.lag,
        "level": args.level,
        "param": var_name,
        "full_data_fit": {
            "names": adequate.param_names,
            "values": adequate.full_data_fit,
        },
        "adequate_bootstrap": {
            "size": adequate.adequate_size,
            "saturated": adequate.saturated,
            "interval": interval_json(&adequate),
        },
        "standard_bootstrap": {
            "size": standard.adequate_size,
            "interval": interval_json(&standard),
        },
        "nonparametric_order_statistic": np_json,
        "nonparametric_error": np_error,
        "seed": config.seed,
        "config": serde_json::to_value(&config).expect("config serializes"),
    });
    let mut artifacts = vec![(".json", serde_json::to_string_pretty(&doc).expect("json"))];
    if let Some(curve) = &adequate.power_curve {
        artifacts.push((".power.tsv", curve.knots_tsv()));
        artifacts.push((".trials.tsv", curve.trials_tsv()));
    }
    emit(args.out.as_deref(), &artifacts)
}

#[derive(Args, Debug)]
pub struct CoverageTableArgs {
    /// Size of the model-adequacy test.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Interval coverage level.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 9)]
    max_m: u32,
    #[arg(long, default_value_t = 9)]
    max_k: u32,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<String>,
}

pub fn cmd_coverage_table(args: CoverageTableArgs) -> Result<(), CliError> {
    if args.max_m < 1 || args.max_k < 1 {
        return Err(CliError::config("max-m and max-k must be at least 1"));
    }
    let tsv = coverage_table_tsv(args.alpha, args.level, args.max_m, args.max_k)
        .map_err(CliError::from)?;
    emit(args.out.as_deref(), &[("", tsv)])
}

#[derive(Args, Debug)]
pub struct SamplingBiasTheoryArgs {
    /// Number of bias classes.
    #[arg(long)]
    j: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    out: Option<String>,
}

pub fn cmd_sampling_bias_theory(args: SamplingBiasTheoryArgs) -> Result<(), CliError> {
    let coverage = sampling_bias_coverage(args.j, args.alpha).map_err(CliError::from)?;
    let (distinguished, repeated) =
        sampling_bias_eigen_coefficients(args.j).map_err(CliError::from)?;
    let mut tsv = String::from("j\tcoverage\tdistinguished_eigenvalue\trepeated_eigenvalue\n");
    tsv.push_str(&format!(
        "{}\t{:.3}\t{:.10}\t{:.10}\n",
        args.j, coverage, distinguished, repeated
    ));
    emit(args.out.as_deref(), &[("", tsv)])
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(subcommand)]
    study: StudyCommand,
}

#[derive(clap::Subcommand, Debug)]
pub enum StudyCommand {
    /// Contaminated-normal study (known-scale normal fit of the mean).
    Contamination(ContaminationArgs),
    /// Sampling-bias study (known-mean normal fit of the scale, LR test).
    SamplingBias(SamplingBiasArgs),
}

#[derive(Args, Debug)]
pub struct ContaminationArgs {
    #[arg(long, default_value_t = 0.02)]
    proportion: f64,
    /// Contaminating standard deviation.
    #[arg(long, default_value_t = 3.0)]
    sigma: f64,
    /// Scale of the contaminating-mean hyperdistribution.
    #[arg(long, default_value_t = 4.0)]
    tau: f64,
    #[arg(long, value_enum, default_value_t = ScaleArg::Desk)]
    scale: ScaleArg,
    /// Override the dataset count of --scale.
    #[arg(long)]
    datasets: Option<usize>,
    /// Override the points-per-dataset of --scale.
    #[arg(long)]
    points: Option<usize>,
    #[command(flatten)]
    engine: EngineArgs,
    /// Output prefix; writes PREFIX.json and PREFIX.rows.tsv.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
pub struct SamplingBiasArgs {
    /// Number of bias classes.
    #[arg(long, default_value_t = 5)]
    j: usize,
    /// Log-normal scale of the class weights (0 = null case).
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, value_enum, default_value_t = ScaleArg::Desk)]
    scale: ScaleArg,
    #[arg(long)]
    datasets: Option<usize>,
    #[arg(long)]
    points: Option<usize>,
    /// Also emit likelihood-ratio QQ data at this forced resample size.
    #[arg(long)]
    qq_forced_size: Option<usize>,
    #[command(flatten)]
    engine: EngineArgs,
    /// Output prefix; writes PREFIX.json, PREFIX.rows.tsv,
    /// PREFIX.scatter.tsv and optionally PREFIX.qq.tsv.
    #[arg(long)]
    out: Option<String>,
}

fn scale_dims(scale: ScaleArg, datasets: Option<usize>, points: Option<usize>) -> (usize, usize) {
    let (d, p) = match scale {
        ScaleArg::Desk => (100, 2000),
        ScaleArg::Paper => (1000, 20000),
    };
    (datasets.unwrap_or(d), points.unwrap_or(p))
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    match args.study {
        StudyCommand::Contamination(a) => {
            let (n_datasets, n_points) = scale_dims(a.scale, a.datasets, a.points);
            let scn = ContaminationScenario {
                proportion: a.proportion,
                hyper_sigma: a.sigma,
                hyper_tau: a.tau,
                n_datasets,
                n_points,
                engine: a.engine.to_config(),
            };
            let report = run_contamination(&scn)?;
            emit(
                a.out.as_deref(),
                &[
                    (".json", report.to_json()),
                    (".rows.tsv", report.rows_tsv()),
                    (".summary.tsv", report.summary_tsv()),
                ],
            )
        }
        StudyCommand::SamplingBias(a) => {
            let (n_datasets, n_points) = scale_dims(a.scale, a.datasets, a.points);
            let scn = SamplingBiasScenario {
                j: a.j,
                tau: a.tau,
                n_datasets,
                n_points,
                engine: a.engine.to_config(),
            };
            let report = run_sampling_bias(&scn)?;
            let mut artifacts = vec![
                (".json", report.to_json()),
                (".rows.tsv", report.rows_tsv()),
                (".summary.tsv", report.summary_tsv()),
                (".scatter.tsv", report.scatter_tsv()),
            ];
            if let Some(size) = a.qq_forced_size {
                artifacts.push((".qq.tsv", emit_llr_qq(&scn, size)?));
            }
            emit(a.out.as_deref(), &artifacts)
        }
    }
}
