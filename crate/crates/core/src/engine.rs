//! The adequate-bootstrap driver: orchestrates resampling, adequacy
//! testing, size estimation and percentile interval construction.
//!
//! Every random decision flows through [`substream`], keyed by the run
//! seed and a trial or replicate index, so a run is reproducible bit for
//! bit under any degree of parallelism.

use rayon::prelude::*;
use serde::Serialize;

use crate::adequacy::{lr_adequacy_test, pearson_adequacy_test, AdequacyOutcome, ParamSource};
use crate::error::{Error, Result};
use crate::isotonic::{adaptive_schedule, PowerCurve};
use crate::models::{Data, ModelFamily, Sample};
use crate::statdist::{chi2_quantile, noncentral_chi2_median_lambda, Stream};

pub use crate::statdist::substream;

// Seed-space domains keep trials, replicates and forced-size runs on
// disjoint streams even when they share a run seed.
const TRIAL_DOMAIN: u64 = 1 << 40;
const REPLICATE_DOMAIN: u64 = 2 << 40;
const FORCED_DOMAIN: u64 = 3 << 40;

/// Resampling mode for both the size-estimation trials and the replicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Resampling {
    WithReplacement,
    WithoutReplacement,
}

/// How the adequate size is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SizeMethod {
    /// Isotonic fit of trial outcomes over a three-phase schedule.
    Isotonic,
    /// Non-central chi-square calibration from the full-data statistic.
    Parametric,
}

/// Where adequacy-test parameters come from on each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrialParams {
    /// Refit the family on every resample.
    Refit,
    /// Reuse the full-data fit.
    FixedFullData,
}

#[derive(Debug, Clone, Serialize)]
pub struct EngineConfig {
    /// Size of the model-adequacy test.
    pub adequacy_alpha: f64,
    /// Rejection probability defining the adequate size.
    pub target_power: f64,
    /// Coverage of the reported intervals.
    pub ci_coverage: f64,
    /// Number of bootstrap replicates behind the intervals.
    pub replicates: usize,
    pub resampling: Resampling,
    pub size_method: SizeMethod,
    /// Grid step of the trial schedule; `None` picks one from the data
    /// size (every value for small data, every 100th for large).
    pub stride: Option<usize>,
    pub seed: u64,
    /// Classes for Pearson adequacy tests on individual data.
    pub classes: usize,
    pub trial_params: TrialParams,
    /// Smallest size the parametric estimator may return.
    pub parametric_min_size: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            adequacy_alpha: 0.05,
            target_power: 0.5,
            ci_coverage: 0.95,
            replicates: 1000,
            resampling: Resampling::WithReplacement,
            size_method: SizeMethod::Isotonic,
            stride: None,
            seed: 0,
            classes: 10,
            trial_params: TrialParams::Refit,
            parametric_min_size: 20,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("adequacy_alpha", self.adequacy_alpha),
            ("target_power", self.target_power),
            ("ci_coverage", self.ci_coverage),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in (0,1), got {v}"
                )));
            }
        }
        if self.replicates < 2 {
            return Err(Error::InvalidConfig("need at least two replicates".into()));
        }
        if self.classes < 2 {
            return Err(Error::InvalidConfig("need at least two classes".into()));
        }
        if self.stride == Some(0) {
            return Err(Error::InvalidConfig("stride must be positive".into()));
        }
        Ok(())
    }

    /// Stride actually used for a data set of size n: every size for small
    /// data, thinning to at most every 25th value for large data.
    pub fn stride_for(&self, n: usize) -> usize {
        self.stride
            .unwrap_or_else(|| (n / 400).clamp(1, 25))
            .min(n.max(1))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// One confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct EngineDiagnostics {
    pub trials_run: usize,
    pub trials_failed: usize,
    pub replicate_failures: usize,
}

/// Everything a run produces: the adequate size, per-parameter percentile
/// intervals, the replicate draws behind them, and the fitted power curve
/// when the isotonic estimator ran.
#[derive(Debug, Clone, Serialize)]
pub struct AdequateResult {
    pub adequate_size: usize,
    pub saturated: bool,
    pub param_names: Vec<String>,
    pub full_data_fit: Vec<f64>,
    pub intervals: Vec<Interval>,
    pub replicates: Vec<Vec<f64>>,
    pub power_curve: Option<PowerCurve>,
    pub config: EngineConfig,
    pub seed: u64,
    pub diagnostics: EngineDiagnostics,
}

impl AdequateResult {
    pub fn interval_for(&self, name: &str) -> Option<Interval> {
        let i = self.param_names.iter().position(|n| n == name)?;
        self.intervals.get(i).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serialization cannot fail")
    }

    /// TSV rows `replicate<TAB>param<TAB>value`.
    pub fn replicates_tsv(&self) -> String {
        let mut out = String::new();
        for (r, row) in self.replicates.iter().enumerate() {
            for (name, value) in self.param_names.iter().zip(row) {
                out.push_str(&format!("{r}\t{name}\t{value}\n"));
            }
        }
        out
    }
}

/// Adequacy test run on each trial resample. `full_fit` carries the
/// full-data parameters for testers that reuse them.
pub trait AdequacyTester<F: ModelFamily>: Sync {
    fn test(
        &self,
        resample: &Data,
        family: &F,
        full_fit: &F::Params,
        alpha: f64,
    ) -> Result<AdequacyOutcome>;
}

/// Pearson chi-square tester; the engine default.
pub struct PearsonTester {
    pub classes: usize,
    pub trial_params: TrialParams,
}

impl<F: ModelFamily> AdequacyTester<F> for PearsonTester {
    fn test(
        &self,
        resample: &Data,
        family: &F,
        full_fit: &F::Params,
        alpha: f64,
    ) -> Result<AdequacyOutcome> {
        let source = match self.trial_params {
            TrialParams::Refit => ParamSource::Refit,
            TrialParams::FixedFullData => ParamSource::Fixed(full_fit),
        };
        pearson_adequacy_test(resample, family, source, alpha, self.classes)
    }
}

/// Likelihood-ratio tester against a fixed alternative family; the null is
/// the engine's own family, refit on each resample.
pub struct LrTester<A: ModelFamily> {
    pub alt: A,
}

impl<F: ModelFamily, A: ModelFamily> AdequacyTester<F> for LrTester<A> {
    fn test(
        &self,
        resample: &Data,
        family: &F,
        _full_fit: &F::Params,
        alpha: f64,
    ) -> Result<AdequacyOutcome> {
        lr_adequacy_test(resample, family, &self.alt, alpha)
    }
}

/// Run the adequate bootstrap with the default Pearson adequacy test.
pub fn adequate_bootstrap<F: ModelFamily>(
    data: &Data,
    family: &F,
    config: &EngineConfig,
) -> Result<AdequateResult> {
    let tester = PearsonTester {
        classes: config.classes,
        trial_params: config.trial_params,
    };
    adequate_bootstrap_with(data, family, &tester, config)
}

/// Run the adequate bootstrap with a caller-supplied adequacy test.
///
/// The run: fit the full data; estimate the adequate size by the
/// configured method (trials draw a resample, fit as configured, test at
/// `adequacy_alpha`); cap at the data size on saturation; then draw
/// `replicates` resamples of the adequate size, fit each, and report the
/// percentile interval of every tracked parameter.
pub fn adequate_bootstrap_with<F, T>(
    data: &Data,
    family: &F,
    tester: &T,
    config: &EngineConfig,
) -> Result<AdequateResult>
where
    F: ModelFamily,
    T: AdequacyTester<F>,
{
    config.validate()?;
    let n = data.size();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let full_fit = family.fit(data)?;

    let mut diagnostics = EngineDiagnostics::default();
    let (adequate_size, saturated, power_curve) = match config.size_method {
        SizeMethod::Isotonic => {
            let runner = |size: usize, trial_index: u64| -> Result<bool> {
                let mut rng = substream(config.seed, TRIAL_DOMAIN | trial_index);
                let resample = draw_resample(data, size, config.resampling, &mut rng)?;
                tester
                    .test(&resample, family, &full_fit, config.adequacy_alpha)
                    .map(|outcome| outcome.rejected)
            };
            let out = adaptive_schedule(runner, n, config.target_power, config.stride_for(n))?;
            diagnostics.trials_run = out.diagnostics.trials_run;
            diagnostics.trials_failed = out.diagnostics.trials_failed;
            (out.adequate_size, out.saturated, Some(out.curve))
        }
        SizeMethod::Parametric => {
            let (size, saturated) = parametric_adequate_size(
                data,
                family,
                config.adequacy_alpha,
                config.classes,
                config.parametric_min_size,
            )?;
            (size, saturated, None)
        }
    };

    let (replicates, failures) =
        replicate_fits(data, family, adequate_size, config, REPLICATE_DOMAIN)?;
    diagnostics.replicate_failures = failures;

    let param_names = family.param_names();
    let intervals = percentile_intervals(&replicates, param_names.len(), config.ci_coverage);
    Ok(AdequateResult {
        adequate_size,
        saturated,
        param_names,
        full_data_fit: family.params_of_interest(&full_fit),
        intervals,
        replicates,
        power_curve,
        config: config.clone(),
        seed: config.seed,
        diagnostics,
    })
}

/// Bootstrap percentile intervals at a forced resample size; the adequate
/// bootstrap's replicate stage exposed on its own. A forced run at the
/// full data size with replacement is the standard bootstrap.
pub fn bootstrap_at_size<F: ModelFamily>(
    data: &Data,
    family: &F,
    size: usize,
    config: &EngineConfig,
) -> Result<AdequateResult> {
    config.validate()?;
    let n = data.size();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if size == 0 {
        return Err(Error::InvalidConfig("forced size must be positive".into()));
    }
    let full_fit = family.fit(data)?;
    let (replicates, failures) = replicate_fits(data, family, size, config, FORCED_DOMAIN)?;
    let param_names = family.param_names();
    let intervals = percentile_intervals(&replicates, param_names.len(), config.ci_coverage);
    Ok(AdequateResult {
        adequate_size: size,
        saturated: size >= n,
        param_names,
        full_data_fit: family.params_of_interest(&full_fit),
        intervals,
        replicates,
        power_curve: None,
        config: config.clone(),
        seed: config.seed,
        diagnostics: EngineDiagnostics {
            replicate_failures: failures,
            ..Default::default()
        },
    })
}

/// Standard bootstrap: replicates at the full data size, with replacement.
pub fn standard_bootstrap<F: ModelFamily>(
    data: &Data,
    family: &F,
    config: &EngineConfig,
) -> Result<AdequateResult> {
    let mut config = config.clone();
    config.resampling = Resampling::WithReplacement;
    bootstrap_at_size(data, family, data.size(), &config)
}

fn replicate_fits<F: ModelFamily>(
    data: &Data,
    family: &F,
    size: usize,
    config: &EngineConfig,
    domain: u64,
) -> Result<(Vec<Vec<f64>>, usize)> {
    let fits: Vec<Option<Vec<f64>>> = (0..config.replicates)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(config.seed, domain | j as u64);
            let resample = draw_resample(data, size, config.resampling, &mut rng).ok()?;
            let fit = family.fit(&resample).ok()?;
            Some(family.params_of_interest(&fit))
        })
        .collect();
    let total = fits.len();
    let replicates: Vec<Vec<f64>> = fits.into_iter().flatten().collect();
    let failures = total - replicates.len();
    // a thin replicate set would make the percentile interval unreliable
    if failures * 10 > total {
        return Err(Error::TooManyFailures {
            failed: failures,
            total,
        });
    }
    Ok((replicates, failures))
}

fn percentile_intervals(replicates: &[Vec<f64>], n_params: usize, coverage: f64) -> Vec<Interval> {
    let mut intervals = Vec::with_capacity(n_params);
    for p in 0..n_params {
        let mut values: Vec<f64> = replicates.iter().map(|r| r[p]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        intervals.push(Interval {
            lower: quantile_sorted(&values, 0.5 * (1.0 - coverage)),
            upper: quantile_sorted(&values, 0.5 * (1.0 + coverage)),
        });
    }
    intervals
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Parametric adequate size from the full-data Pearson statistic: the test
/// statistic at resample size n is approximately non-central chi-square
/// with noncentrality (n/N) times the full-data statistic, so the size at
/// which the median hits the critical value is N * lambda* / X^2_N.
/// Returns the size and a saturation flag.
pub fn parametric_adequate_size<F: ModelFamily>(
    data: &Data,
    family: &F,
    adequacy_alpha: f64,
    classes: usize,
    min_size: usize,
) -> Result<(usize, bool)> {
    let n = data.size();
    let full_fit = family.fit(data)?;
    let outcome = pearson_adequacy_test(
        data,
        family,
        ParamSource::Fixed(&full_fit),
        adequacy_alpha,
        classes,
    )?;
    if outcome.statistic <= 0.0 {
        // a perfect fit never rejects; saturate at the data size
        return Ok((n, true));
    }
    let target = chi2_quantile(1.0 - adequacy_alpha, outcome.df)?;
    let lambda = noncentral_chi2_median_lambda(outcome.df, target)?;
    let raw = (n as f64 * lambda / outcome.statistic).round();
    if raw >= n as f64 {
        return Ok((n, true));
    }
    Ok(((raw as usize).max(min_size.min(n)), false))
}

/// Draw a resample of the requested size, preserving the data kind.
pub fn draw_resample(data: &Data, size: usize, mode: Resampling, rng: &mut Stream) -> Result<Data> {
    if size == 0 {
        return Err(Error::InvalidConfig(
            "resample size must be positive".into(),
        ));
    }
    match data {
        Data::Individual(sample) => {
            let values = sample.values();
            let n = values.len();
            match mode {
                Resampling::WithReplacement => {
                    let picked: Vec<f64> = (0..size)
                        .map(|_| values[rng.uniform_int(n as u64) as usize])
                        .collect();
                    Ok(Data::Individual(Sample::new(picked)?))
                }
                Resampling::WithoutReplacement => {
                    if size > n {
                        return Err(Error::InvalidConfig(format!(
                            "cannot draw {size} of {n} without replacement"
                        )));
                    }
                    // Floyd's algorithm; insertion order keeps the draw
                    // deterministic.
                    let mut chosen: Vec<usize> = Vec::with_capacity(size);
                    let mut seen = std::collections::HashSet::with_capacity(size * 2);
                    for i in (n - size)..n {
                        let j = rng.uniform_int(i as u64 + 1) as usize;
                        if seen.insert(j) {
                            chosen.push(j);
                        } else {
                            seen.insert(i);
                            chosen.push(i);
                        }
                    }
                    Ok(Data::Individual(Sample::new(
                        chosen.into_iter().map(|i| values[i]).collect(),
                    )?))
                }
            }
        }
        Data::Grouped(grouped) => {
            let counts = grouped.counts();
            let total = grouped.total();
            let mut cumulative: Vec<u64> = Vec::with_capacity(counts.len());
            let mut acc = 0u64;
            for &c in counts {
                acc += c;
                cumulative.push(acc);
            }
            let mut new_counts = vec![0u64; counts.len()];
            match mode {
                Resampling::WithReplacement => {
                    for _ in 0..size {
                        let t = rng.uniform_int(total);
                        let class = cumulative.partition_point(|&c| c <= t);
                        new_counts[class] += 1;
                    }
                }
                Resampling::WithoutReplacement => {
                    if size as u64 > total {
                        return Err(Error::InvalidConfig(format!(
                            "cannot draw {size} of {total} without replacement"
                        )));
                    }
                    let mut remaining = counts.to_vec();
                    let mut left = total;
                    for _ in 0..size {
                        let mut t = rng.uniform_int(left);
                        for (i, r) in remaining.iter_mut().enumerate() {
                            if t < *r {
                                *r -= 1;
                                new_counts[i] += 1;
                                left -= 1;
                                break;
                            }
                            t -= *r;
                        }
                    }
                }
            }
            Ok(Data::Grouped(grouped.with_counts(new_counts)?))
        }
    }
}
