//! Reproducible simulation studies: contaminated-normal data with a
//! known-scale normal fit, and sampling-biased normal data with a
//! known-mean normal fit tested against the stepwise-bias alternative.
//!
//! Datasets run concurrently on disjoint seed substreams and reduce by
//! dataset index, so a study report is byte-identical for a given
//! (scenario, seed) under any thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{
    adequate_bootstrap_with, standard_bootstrap, EngineConfig, Interval, LrTester,
};
use crate::error::{Error, Result};
use crate::models::{Data, NormalFull, NormalKnownMean, NormalKnownVar, Sample, SamplingBias};
use crate::statdist::{chi2_quantile, derive_seed, substream};
use crate::theory::{sampling_bias_boundaries, sampling_bias_theoretical_size};

// Substream roles within one dataset's seed space.
const HYPER_STREAM: u64 = 0;
const DATA_STREAM: u64 = 1;
const ENGINE_SEED: u64 = 2;
const STANDARD_SEED: u64 = 3;

/// Contaminated-normal design: a standard normal main distribution where
/// each point is replaced, with the given probability, by a draw from
/// normal(contaminating mean, sigma); the contaminating mean itself is
/// drawn once per dataset from normal(3, tau).
#[derive(Debug, Clone, Serialize)]
pub struct ContaminationScenario {
    pub proportion: f64,
    pub hyper_sigma: f64,
    pub hyper_tau: f64,
    pub n_datasets: usize,
    pub n_points: usize,
    pub engine: EngineConfig,
}

impl ContaminationScenario {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.proportion) {
            return Err(Error::InvalidConfig(
                "contamination proportion must lie in [0,1]".into(),
            ));
        }
        if !(self.hyper_sigma > 0.0) || self.hyper_tau < 0.0 {
            return Err(Error::InvalidConfig(
                "hyper sigma must be positive, tau nonnegative".into(),
            ));
        }
        if self.n_datasets == 0 || self.n_points == 0 {
            return Err(Error::InvalidConfig(
                "need at least one dataset and one point".into(),
            ));
        }
        self.engine.validate()
    }
}

/// Sampling-bias design: weights p_i ~ lognormal(0, tau) on J classes with
/// boundaries at the i/J normal percentiles; data drawn from the standard
/// normal and accepted with probability p_i / max(p).
#[derive(Debug, Clone, Serialize)]
pub struct SamplingBiasScenario {
    pub j: usize,
    pub tau: f64,
    pub n_datasets: usize,
    pub n_points: usize,
    pub engine: EngineConfig,
}

impl SamplingBiasScenario {
    pub fn validate(&self) -> Result<()> {
        if self.j < 3 {
            return Err(Error::InvalidConfig(
                "sampling-bias study needs J >= 3".into(),
            ));
        }
        if self.tau < 0.0 {
            return Err(Error::InvalidConfig("tau must be nonnegative".into()));
        }
        if self.n_datasets == 0 || self.n_points == 0 {
            return Err(Error::InvalidConfig(
                "need at least one dataset and one point".into(),
            ));
        }
        self.engine.validate()
    }
}

/// Per-dataset outcome common to both studies.
#[derive(Debug, Clone, Serialize)]
pub struct DatasetRow {
    pub dataset: usize,
    /// Contaminating mean or the theoretical adequate size, by study.
    pub scenario_value: f64,
    pub adequate_size: usize,
    pub saturated: bool,
    pub adequate_interval: Interval,
    pub standard_interval: Interval,
    pub adequate_covered: bool,
    pub standard_covered: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudySummary {
    pub datasets_run: usize,
    pub datasets_failed: usize,
    pub adequate_covered: usize,
    pub standard_covered: usize,
    pub median_adequate_size: f64,
    pub mean_adequate_size: f64,
    pub median_adequate_width: f64,
    pub mean_adequate_width: f64,
    pub mean_standard_width: f64,
    pub saturation_rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyReport<S: Serialize> {
    pub scenario: S,
    pub seed: u64,
    pub true_value: f64,
    pub tracked_param: String,
    pub summary: StudySummary,
    pub rows: Vec<DatasetRow>,
    pub failures: Vec<String>,
}

impl<S: Serialize> StudyReport<S> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Per-dataset rows as TSV.
    pub fn rows_tsv(&self) -> String {
        let mut out = String::from(
            "dataset\tscenario_value\tadequate_size\tsaturated\tadequate_lower\tadequate_upper\tstandard_lower\tstandard_upper\tadequate_covered\tstandard_covered\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.dataset,
                r.scenario_value,
                r.adequate_size,
                u8::from(r.saturated),
                r.adequate_interval.lower,
                r.adequate_interval.upper,
                r.standard_interval.lower,
                r.standard_interval.upper,
                u8::from(r.adequate_covered),
                u8::from(r.standard_covered),
            ));
        }
        out
    }

    /// `theoretical<TAB>estimated` scatter rows (sampling-bias study).
    pub fn scatter_tsv(&self) -> String {
        let mut out = String::from("theoretical_size\testimated_size\n");
        for r in &self.rows {
            out.push_str(&format!("{}\t{}\n", r.scenario_value, r.adequate_size));
        }
        out
    }

    /// One-row summary with the quantities the study tables report.
    pub fn summary_tsv(&self) -> String {
        let s = &self.summary;
        format!(
            "datasets\tadequate_covered\tstandard_covered\tmean_size\tmedian_size\tmean_width\tmedian_width\tmean_standard_width\tsaturation_rate\n\
             {}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            s.datasets_run,
            s.adequate_covered,
            s.standard_covered,
            s.mean_adequate_size,
            s.median_adequate_size,
            s.mean_adequate_width,
            s.median_adequate_width,
            s.mean_standard_width,
            s.saturation_rate,
        )
    }
}

fn summarize(rows: &[DatasetRow], failed: usize) -> StudySummary {
    let mut sizes: Vec<f64> = rows.iter().map(|r| r.adequate_size as f64).collect();
    sizes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut widths: Vec<f64> = rows.iter().map(|r| r.adequate_interval.width()).collect();
    widths.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = rows.len().max(1) as f64;
    StudySummary {
        datasets_run: rows.len(),
        datasets_failed: failed,
        adequate_covered: rows.iter().filter(|r| r.adequate_covered).count(),
        standard_covered: rows.iter().filter(|r| r.standard_covered).count(),
        median_adequate_size: median_sorted(&sizes),
        mean_adequate_size: sizes.iter().sum::<f64>() / n,
        median_adequate_width: median_sorted(&widths),
        mean_adequate_width: widths.iter().sum::<f64>() / n,
        mean_standard_width: rows
            .iter()
            .map(|r| r.standard_interval.width())
            .sum::<f64>()
            / n,
        saturation_rate: rows.iter().filter(|r| r.saturated).count() as f64 / n,
    }
}

fn median_sorted(sorted: &[f64]) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Run the contaminated-normal study. The model is a known-scale normal
/// and the tracked parameter is the mean, true value 0. The adequacy test
/// is the likelihood ratio of the known-scale fit against the free-scale
/// normal (one degree of freedom): contamination of this design shows up
/// almost entirely as scale inflation, which class-count tests barely see.
pub fn run_contamination(
    scn: &ContaminationScenario,
) -> Result<StudyReport<ContaminationScenario>> {
    scn.validate()?;
    let family = NormalKnownVar::new(1.0)?;
    let tester = LrTester { alt: NormalFull };
    let results: Vec<std::result::Result<DatasetRow, String>> = (0..scn.n_datasets)
        .into_par_iter()
        .map(|d| {
            let seed_d = derive_seed(scn.engine.seed, d as u64);
            let mut hyper = substream(seed_d, HYPER_STREAM);
            let contaminating_mean = 3.0 + scn.hyper_tau * hyper.standard_normal();
            let mut gen = substream(seed_d, DATA_STREAM);
            let mut values = Vec::with_capacity(scn.n_points);
            for _ in 0..scn.n_points {
                let contaminated = gen.uniform() <= scn.proportion;
                values.push(if contaminated {
                    contaminating_mean + scn.hyper_sigma * gen.standard_normal()
                } else {
                    gen.standard_normal()
                });
            }
            (|| -> Result<DatasetRow> {
                let data = Data::Individual(Sample::new(values)?);
                let adequate = adequate_bootstrap_with(
                    &data,
                    &family,
                    &tester,
                    &scn.engine
                        .clone()
                        .with_seed(derive_seed(seed_d, ENGINE_SEED)),
                )?;
                let standard = standard_bootstrap(
                    &data,
                    &family,
                    &scn.engine
                        .clone()
                        .with_seed(derive_seed(seed_d, STANDARD_SEED)),
                )?;
                let ai = adequate.interval_for("mean").expect("tracked param");
                let si = standard.interval_for("mean").expect("tracked param");
                Ok(DatasetRow {
                    dataset: d,
                    scenario_value: contaminating_mean,
                    adequate_size: adequate.adequate_size,
                    saturated: adequate.saturated,
                    adequate_interval: ai,
                    standard_interval: si,
                    adequate_covered: ai.contains(0.0),
                    standard_covered: si.contains(0.0),
                })
            })()
            .map_err(|e| format!("dataset {d}: {e}"))
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(msg) => failures.push(msg),
        }
    }
    let summary = summarize(&rows, failures.len());
    Ok(StudyReport {
        scenario: scn.clone(),
        seed: scn.engine.seed,
        true_value: 0.0,
        tracked_param: "mean".into(),
        summary,
        rows,
        failures,
    })
}

fn draw_biased_sample(
    j: usize,
    weights: &[f64],
    boundaries: &[f64],
    n_points: usize,
    rng: &mut crate::statdist::Stream,
) -> Result<Vec<f64>> {
    let max_w = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let interior = &boundaries[1..j];
    let mut values = Vec::with_capacity(n_points);
    let mut guard = 0usize;
    while values.len() < n_points {
        let x = rng.standard_normal();
        let class = interior.partition_point(|&c| c < x);
        if rng.uniform() <= weights[class] / max_w {
            values.push(x);
        }
        guard += 1;
        if guard > 1000 * n_points.max(1000) {
            return Err(Error::Numerical(
                "acceptance rate too low to generate data".into(),
            ));
        }
    }
    Ok(values)
}

/// Run the sampling-bias study. The model is a known-mean normal; the
/// adequacy test is the likelihood ratio against the stepwise-bias
/// alternative; the tracked parameter is the variance, true value 1.
/// Each row also records the theoretical adequate size for its weight
/// draw (`scenario_value`), capped at the data size for the scatter.
pub fn run_sampling_bias(scn: &SamplingBiasScenario) -> Result<StudyReport<SamplingBiasScenario>> {
    scn.validate()?;
    let boundaries = sampling_bias_boundaries(scn.j)?;
    let family = NormalKnownMean::new(0.0);
    let results: Vec<std::result::Result<DatasetRow, String>> = (0..scn.n_datasets)
        .into_par_iter()
        .map(|d| {
            let seed_d = derive_seed(scn.engine.seed, d as u64);
            let mut hyper = substream(seed_d, HYPER_STREAM);
            let weights: Vec<f64> = (0..scn.j)
                .map(|_| (scn.tau * hyper.standard_normal()).exp())
                .collect();
            (|| -> Result<DatasetRow> {
                let mut gen = substream(seed_d, DATA_STREAM);
                let values =
                    draw_biased_sample(scn.j, &weights, &boundaries, scn.n_points, &mut gen)?;
                let data = Data::Individual(Sample::new(values)?);
                let tester = LrTester {
                    alt: SamplingBias::new(boundaries.clone())?,
                };
                let adequate = adequate_bootstrap_with(
                    &data,
                    &family,
                    &tester,
                    &scn.engine
                        .clone()
                        .with_seed(derive_seed(seed_d, ENGINE_SEED)),
                )?;
                let standard = standard_bootstrap(
                    &data,
                    &family,
                    &scn.engine
                        .clone()
                        .with_seed(derive_seed(seed_d, STANDARD_SEED)),
                )?;
                let x2: Vec<f64> = weights.iter().map(|w| w - 1.0).collect();
                let theoretical =
                    sampling_bias_theoretical_size(scn.j, &x2, scn.engine.adequacy_alpha)?
                        .min(scn.n_points as f64);
                let ai = adequate.interval_for("sigma_sq").expect("tracked param");
                let si = standard.interval_for("sigma_sq").expect("tracked param");
                Ok(DatasetRow {
                    dataset: d,
                    scenario_value: theoretical,
                    adequate_size: adequate.adequate_size,
                    saturated: adequate.saturated,
                    adequate_interval: ai,
                    standard_interval: si,
                    adequate_covered: ai.contains(1.0),
                    standard_covered: si.contains(1.0),
                })
            })()
            .map_err(|e| format!("dataset {d}: {e}"))
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(msg) => failures.push(msg),
        }
    }
    let summary = summarize(&rows, failures.len());
    Ok(StudyReport {
        scenario: scn.clone(),
        seed: scn.engine.seed,
        true_value: 1.0,
        tracked_param: "sigma_sq".into(),
        summary,
        rows,
        failures,
    })
}

/// QQ data for the likelihood-ratio statistic: one dataset from the
/// scenario, `replicates` bootstrap resamples of `forced_size`, each
/// refit under the null and the alternative. Rows pair the sorted
/// statistics with chi-square(J-1) quantiles; the final row marks the 5%
/// critical value.
pub fn emit_llr_qq(scn: &SamplingBiasScenario, forced_size: usize) -> Result<String> {
    scn.validate()?;
    if forced_size == 0 || forced_size > scn.n_points {
        return Err(Error::InvalidConfig(
            "forced size must lie in [1, n_points]".into(),
        ));
    }
    let boundaries = sampling_bias_boundaries(scn.j)?;
    let family = NormalKnownMean::new(0.0);
    let alt = SamplingBias::new(boundaries.clone())?;

    let seed_d = derive_seed(scn.engine.seed, 0);
    let mut hyper = substream(seed_d, HYPER_STREAM);
    let weights: Vec<f64> = (0..scn.j)
        .map(|_| (scn.tau * hyper.standard_normal()).exp())
        .collect();
    let mut gen = substream(seed_d, DATA_STREAM);
    let values = draw_biased_sample(scn.j, &weights, &boundaries, scn.n_points, &mut gen)?;
    let data = Data::Individual(Sample::new(values)?);

    let engine_seed = derive_seed(seed_d, ENGINE_SEED);
    let stats: Vec<Option<f64>> = (0..scn.engine.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(engine_seed, r as u64);
            let resample =
                crate::engine::draw_resample(&data, forced_size, scn.engine.resampling, &mut rng)
                    .ok()?;
            crate::adequacy::lr_adequacy_test(&resample, &family, &alt, scn.engine.adequacy_alpha)
                .ok()
                .map(|o| o.statistic)
        })
        .collect();
    let mut stats: Vec<f64> = stats.into_iter().flatten().collect();
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let df = (scn.j - 1) as u32;
    let b = stats.len();
    let mut out = String::from("theoretical\tempirical\n");
    for (i, s) in stats.iter().enumerate() {
        let q = chi2_quantile((i as f64 + 0.5) / b as f64, df)?;
        out.push_str(&format!("{q}\t{s}\n"));
    }
    let crit = chi2_quantile(1.0 - scn.engine.adequacy_alpha, df)?;
    out.push_str(&format!("critical\t{crit}\n"));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_engine(seed: u64) -> EngineConfig {
        EngineConfig {
            replicates: 120,
            seed,
            ..EngineConfig::default()
        }
    }

    #[test]
    fn contamination_null_case_smoke() {
        // No contamination: coverage near nominal and the typical size is
        // the full data. Bootstrap trials at sizes near n carry the
        // (n/N) X^2_N noncentrality of the empirical distribution, so a
        // fraction of null datasets solves just below the cap rather than
        // saturating; the median still sits at the cap.
        let scn = ContaminationScenario {
            proportion: 0.0,
            hyper_sigma: 3.0,
            hyper_tau: 4.0,
            n_datasets: 20,
            n_points: 400,
            engine: tiny_engine(31),
        };
        let report = run_contamination(&scn).unwrap();
        assert_eq!(report.summary.datasets_run, 20);
        assert!(
            report.summary.median_adequate_size >= 300.0,
            "median size {}",
            report.summary.median_adequate_size
        );
        assert!(
            report.summary.saturation_rate > 0.3,
            "{}",
            report.summary.saturation_rate
        );
        assert!(report.summary.adequate_covered >= 16);
    }

    #[test]
    fn study_reports_identical_for_identical_seed() {
        let scn = ContaminationScenario {
            proportion: 0.02,
            hyper_sigma: 3.0,
            hyper_tau: 4.0,
            n_datasets: 6,
            n_points: 300,
            engine: tiny_engine(77),
        };
        let a = run_contamination(&scn).unwrap().to_json();
        let b = run_contamination(&scn).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_bias_null_smoke() {
        let scn = SamplingBiasScenario {
            j: 5,
            tau: 0.0,
            n_datasets: 10,
            n_points: 400,
            engine: tiny_engine(41),
        };
        let report = run_sampling_bias(&scn).unwrap();
        assert_eq!(report.summary.datasets_run, 10);
        // null weights: the theoretical size is infinite, capped at n
        for row in &report.rows {
            assert_eq!(row.scenario_value, 400.0);
        }
        assert!(report.summary.adequate_covered >= 7);
    }

    #[test]
    fn llr_qq_rows_match_replicates() {
        let scn = SamplingBiasScenario {
            j: 5,
            tau: 0.0,
            n_datasets: 1,
            n_points: 500,
            engine: tiny_engine(53),
        };
        let tsv = emit_llr_qq(&scn, 250).unwrap();
        let lines: Vec<&str> = tsv.lines().collect();
        // header + replicates + critical marker
        assert_eq!(lines.len(), 1 + scn.engine.replicates + 1);
        assert!(lines.last().unwrap().starts_with("critical\t"));
        // determinism
        assert_eq!(tsv, emit_llr_qq(&scn, 250).unwrap());
    }
}
