//! Model-adequacy tests: Pearson chi-square goodness of fit for individual
//! and grouped data, and likelihood-ratio tests for nested families.

use std::collections::HashMap;
use std::sync::RwLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{grouped_class_probs, Data, ModelFamily, Sample};
use crate::statdist::chi2_quantile;

/// Class boundaries plus per-class counts. Class i covers (c_{i-1}, c_i];
/// the outer boundaries may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupedData {
    boundaries: Vec<f64>,
    counts: Vec<u64>,
}

impl GroupedData {
    pub fn new(boundaries: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        if boundaries.len() < 2 || counts.len() != boundaries.len() - 1 {
            return Err(Error::InvalidConfig(
                "counts length must equal number of classes (boundaries - 1)".into(),
            ));
        }
        if boundaries.iter().any(|b| b.is_nan()) {
            return Err(Error::InvalidConfig("boundaries must not be NaN".into()));
        }
        if boundaries.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig(
                "boundaries must be strictly increasing".into(),
            ));
        }
        if counts.iter().sum::<u64>() == 0 {
            return Err(Error::InvalidConfig("total count must be positive".into()));
        }
        Ok(GroupedData { boundaries, counts })
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Same classes, new counts.
    pub fn with_counts(&self, counts: Vec<u64>) -> Result<Self> {
        GroupedData::new(self.boundaries.clone(), counts)
    }

    /// Keep only classes whose lower boundary is at least `limit`.
    pub fn truncate_below(&self, limit: f64) -> Result<Self> {
        let first = self.boundaries.partition_point(|&b| b < limit);
        if first + 1 >= self.boundaries.len() {
            return Err(Error::InvalidConfig(format!(
                "truncation at {limit} removes every class"
            )));
        }
        GroupedData::new(
            self.boundaries[first..].to_vec(),
            self.counts[first..].to_vec(),
        )
    }
}

/// Which test produced an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TestKind {
    Pearson,
    LikelihoodRatio,
}

/// Result of one adequacy test.
#[derive(Debug, Clone, Serialize)]
pub struct AdequacyOutcome {
    pub statistic: f64,
    pub df: u32,
    pub critical_value: f64,
    pub rejected: bool,
    pub test_kind: TestKind,
    pub alpha: f64,
}

impl AdequacyOutcome {
    fn from_statistic(statistic: f64, df: u32, alpha: f64, kind: TestKind) -> Result<Self> {
        let critical_value = chi2_critical_cached(alpha, df)?;
        Ok(AdequacyOutcome {
            statistic,
            df,
            critical_value,
            rejected: statistic > critical_value,
            test_kind: kind,
            alpha,
        })
    }
}

/// Where the test takes its parameters from.
#[derive(Debug, Clone, Copy)]
pub enum ParamSource<'a, P> {
    /// Refit the family on the data under test.
    Refit,
    /// Use externally supplied parameters (typically the full-data fit).
    Fixed(&'a P),
}

// Critical values repeat across thousands of trials; memoize per (alpha, df).
static CRIT_CACHE: RwLock<Option<HashMap<(u64, u32), f64>>> = RwLock::new(None);

fn chi2_critical_cached(alpha: f64, df: u32) -> Result<f64> {
    let key = (alpha.to_bits(), df);
    if let Some(cache) = CRIT_CACHE.read().unwrap().as_ref() {
        if let Some(&v) = cache.get(&key) {
            return Ok(v);
        }
    }
    let v = chi2_quantile(1.0 - alpha, df)?;
    CRIT_CACHE
        .write()
        .unwrap()
        .get_or_insert_with(HashMap::new)
        .insert(key, v);
    Ok(v)
}

/// Boundaries splitting the model distribution into K classes of equal
/// probability: the model quantiles at i/K plus the support endpoints.
pub fn equiprobable_classes(
    model_cdf: impl Fn(f64) -> f64,
    k: usize,
    support: (f64, f64),
) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::InvalidConfig("need at least two classes".into()));
    }
    let (lo, hi) = support;
    let mut boundaries = Vec::with_capacity(k + 1);
    boundaries.push(lo);
    for i in 1..k {
        let target = i as f64 / k as f64;
        boundaries.push(invert_cdf(&model_cdf, target, lo, hi)?);
    }
    boundaries.push(hi);
    if boundaries.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Numerical(
            "model quantiles are not strictly increasing".into(),
        ));
    }
    Ok(boundaries)
}

fn invert_cdf(cdf: &impl Fn(f64) -> f64, target: f64, lo: f64, hi: f64) -> Result<f64> {
    // finite bracket inside the (possibly infinite) support
    let mut a = if lo.is_finite() { lo } else { -1.0 };
    let mut b = if hi.is_finite() { hi } else { 1.0 };
    if !lo.is_finite() {
        let mut guard = 0;
        while cdf(a) > target {
            a = if a < 0.0 { a * 2.0 } else { -1.0 };
            guard += 1;
            if guard > 2100 {
                return Err(Error::Numerical(
                    "failed to bracket quantile from below".into(),
                ));
            }
        }
    }
    if !hi.is_finite() {
        if b <= a {
            b = a + 1.0;
        }
        let mut guard = 0;
        while cdf(b) < target {
            b = if b > 0.0 { b * 2.0 } else { 1.0 };
            guard += 1;
            if guard > 2100 {
                return Err(Error::Numerical(
                    "failed to bracket quantile from above".into(),
                ));
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if cdf(mid) < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// The Pearson statistic: sum over classes of (observed - n p)^2 / (n p).
pub fn pearson_statistic(counts: &[u64], class_probs: &[f64], n: u64) -> Result<f64> {
    if counts.len() != class_probs.len() {
        return Err(Error::InvalidConfig(
            "counts and probabilities must align".into(),
        ));
    }
    if counts.iter().sum::<u64>() != n {
        return Err(Error::InvalidConfig("counts must sum to n".into()));
    }
    if class_probs.iter().any(|&p| p <= 0.0) {
        return Err(Error::domain("every class probability must be positive"));
    }
    let total: f64 = class_probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!(
            "class probabilities must sum to 1, got {total}"
        )));
    }
    let nf = n as f64;
    Ok(counts
        .iter()
        .zip(class_probs)
        .map(|(&s, &p)| {
            let expect = nf * p;
            let d = s as f64 - expect;
            d * d / expect
        })
        .sum())
}

/// Pearson chi-square adequacy test. Individual data is classed into K
/// equiprobable cells of the fitted (or supplied) model; grouped data uses
/// its own classes, with sparse tail classes merged until every expected
/// count reaches 5 (never below two classes). Degrees of freedom are
/// K - 1 - m when the parameters were refit on the data under test and
/// K - 1 when they were supplied, floored at 1.
pub fn pearson_adequacy_test<F: ModelFamily>(
    data: &Data,
    family: &F,
    source: ParamSource<'_, F::Params>,
    alpha: f64,
    k: usize,
) -> Result<AdequacyOutcome> {
    let (params, fitted) = match source {
        ParamSource::Refit => (family.fit(data)?, family.param_count()),
        ParamSource::Fixed(p) => (p.clone(), 0),
    };
    let (statistic, classes) = match data {
        Data::Individual(sample) => {
            let boundaries = class_boundaries(family, &params, k)?;
            let counts = bin_sample(sample, &boundaries);
            let probs = vec![1.0 / k as f64; k];
            (pearson_statistic(&counts, &probs, sample.len() as u64)?, k)
        }
        Data::Grouped(grouped) => {
            let probs = grouped_class_probs(family, grouped, &params)?;
            let (counts, probs) = merge_sparse_classes(grouped.counts(), &probs, grouped.total());
            if probs.iter().any(|&p| grouped.total() as f64 * p < 1e-8) {
                return Err(Error::Numerical(
                    "an expected class count is numerically zero even after merging".into(),
                ));
            }
            let classes = counts.len();
            (
                pearson_statistic(&counts, &probs, grouped.total())?,
                classes,
            )
        }
    };
    let df = (classes.saturating_sub(1).saturating_sub(fitted)).max(1) as u32;
    AdequacyOutcome::from_statistic(statistic, df, alpha, TestKind::Pearson)
}

fn class_boundaries<F: ModelFamily>(family: &F, params: &F::Params, k: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::InvalidConfig("need at least two classes".into()));
    }
    let (lo, hi) = family.support(params);
    // analytic quantiles when the family has them, bisection otherwise
    if let Some(first) = family.quantile(1.0 / k as f64, params) {
        let mut b = Vec::with_capacity(k + 1);
        b.push(lo);
        b.push(first);
        for i in 2..k {
            b.push(
                family
                    .quantile(i as f64 / k as f64, params)
                    .ok_or_else(|| Error::Numerical("family quantile failed mid-grid".into()))?,
            );
        }
        b.push(hi);
        if b.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Numerical(
                "model quantiles are not strictly increasing".into(),
            ));
        }
        return Ok(b);
    }
    equiprobable_classes(|x| family.cdf(x, params), k, (lo, hi))
}

fn bin_sample(sample: &Sample, boundaries: &[f64]) -> Vec<u64> {
    let interior = &boundaries[1..boundaries.len() - 1];
    let mut counts = vec![0u64; boundaries.len() - 1];
    for &x in sample.values() {
        let class = interior.partition_point(|&c| c < x);
        counts[class] += 1;
    }
    counts
}

/// Merge classes until every expected count n*p reaches 5, first folding
/// the right tail inward, then the left, then any interior stragglers into
/// their right neighbour. Stops at two classes regardless.
fn merge_sparse_classes(counts: &[u64], probs: &[f64], n: u64) -> (Vec<u64>, Vec<f64>) {
    let mut counts = counts.to_vec();
    let mut probs = probs.to_vec();
    let nf = n as f64;
    let deficient = |p: f64| nf * p < 5.0;

    while counts.len() > 2 && deficient(*probs.last().unwrap()) {
        let last = counts.len() - 1;
        counts[last - 1] += counts[last];
        probs[last - 1] += probs[last];
        counts.pop();
        probs.pop();
    }
    while counts.len() > 2 && deficient(probs[0]) {
        counts[1] += counts[0];
        probs[1] += probs[0];
        counts.remove(0);
        probs.remove(0);
    }
    loop {
        if counts.len() <= 2 {
            break;
        }
        match probs.iter().position(|&p| deficient(p)) {
            None => break,
            Some(i) => {
                let into = if i + 1 < counts.len() { i + 1 } else { i - 1 };
                counts[into] += counts[i];
                probs[into] += probs[i];
                counts.remove(i);
                probs.remove(i);
            }
        }
    }
    (counts, probs)
}

/// Likelihood-ratio adequacy test of a null family nested inside an
/// alternative. The statistic is twice the log-likelihood gap at the two
/// MLEs; degrees of freedom are the effective parameter-count difference,
/// floored at 1. Small negative statistics are numerical noise from the
/// independent optimizations and clamp to zero; anything below -1e-6
/// signals an optimizer failure.
pub fn lr_adequacy_test<N: ModelFamily, A: ModelFamily>(
    data: &Data,
    null_family: &N,
    alt_family: &A,
    alpha: f64,
) -> Result<AdequacyOutcome> {
    let null_fit = null_family.fit(data)?;
    let alt_fit = alt_family.fit(data)?;
    let l_null = null_family.loglik(data, &null_fit)?;
    let l_alt = alt_family.loglik(data, &alt_fit)?;
    let mut statistic = 2.0 * (l_alt - l_null);
    if statistic < -1e-6 {
        return Err(Error::OptimizerFailed(format!(
            "likelihood ratio statistic {statistic} is negative beyond numerical noise"
        )));
    }
    if statistic < 0.0 {
        statistic = 0.0;
    }
    let df = alt_family
        .param_count()
        .saturating_sub(null_family.param_count())
        .max(1) as u32;
    AdequacyOutcome::from_statistic(statistic, df, alpha, TestKind::LikelihoodRatio)
}
