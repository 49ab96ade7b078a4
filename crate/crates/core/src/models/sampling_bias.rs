//! Normal data observed through stepwise inclusion weights: a mean-zero
//! normal with unknown scale sigma, where a point in class (c_{i-1}, c_i]
//! enters the sample with relative weight p_i. The weights are scale-free;
//! the convention p_i = n_i / T_i(sigma) at the fitted point makes the
//! profile likelihood over sigma explicit.

use serde::Serialize;

use super::{Data, ModelFamily, Sample};
use crate::error::{Error, Result};
use crate::statdist::{normal_cdf, Stream};

const LN_2PI: f64 = 1.8378770664093453;
const ROOT_2PI: f64 = 2.5066282746310002;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingBiasParams {
    pub sigma: f64,
    /// Relative inclusion weights, one per class; only ratios matter.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SamplingBias {
    /// Fixed class boundaries c_0 < ... < c_J; the outer two may be infinite.
    boundaries: Vec<f64>,
}

impl SamplingBias {
    pub fn new(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::InvalidConfig("need at least one class".into()));
        }
        if boundaries.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig(
                "boundaries must be strictly increasing".into(),
            ));
        }
        Ok(SamplingBias { boundaries })
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn n_classes(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Class probabilities T_i(sigma) = Phi(c_i/sigma) - Phi(c_{i-1}/sigma).
    pub fn class_probs(&self, sigma: f64) -> Vec<f64> {
        let phi = |c: f64| -> f64 {
            if c == f64::NEG_INFINITY {
                0.0
            } else if c == f64::INFINITY {
                1.0
            } else {
                normal_cdf(c / sigma)
            }
        };
        self.boundaries
            .windows(2)
            .map(|w| phi(w[1]) - phi(w[0]))
            .collect()
    }

    fn class_of(&self, x: f64) -> usize {
        // class i covers (c_{i-1}, c_i]
        let interior = &self.boundaries[1..self.boundaries.len() - 1];
        interior.partition_point(|&c| c < x)
    }

    /// Per-class counts of a sample.
    pub fn class_counts(&self, sample: &Sample) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_classes()];
        for &x in sample.values() {
            counts[self.class_of(x)] += 1;
        }
        counts
    }

    /// d T_i / d sigma for every class. Terms at infinite boundaries vanish
    /// (the limit of c exp(-c^2 / 2 sigma^2) as |c| grows).
    pub fn class_prob_dsigma(&self, sigma: f64) -> Vec<f64> {
        let u = |c: f64| -> f64 {
            if c.is_infinite() {
                0.0
            } else {
                c * (-c * c / (2.0 * sigma * sigma)).exp()
            }
        };
        let scale = 1.0 / (ROOT_2PI * sigma * sigma);
        self.boundaries
            .windows(2)
            .map(|w| scale * (u(w[0]) - u(w[1])))
            .collect()
    }

    /// d^2 T_i / d sigma^2, validated elsewhere against finite differences.
    pub fn class_prob_d2sigma(&self, sigma: f64) -> Vec<f64> {
        let s2 = sigma * sigma;
        let w_term = |c: f64| -> f64 {
            if c.is_infinite() {
                0.0
            } else {
                (c * c * c / s2 - 2.0 * c) * (-c * c / (2.0 * s2)).exp()
            }
        };
        let scale = 1.0 / (ROOT_2PI * sigma * s2);
        self.boundaries
            .windows(2)
            .map(|w| scale * (w_term(w[0]) - w_term(w[1])))
            .collect()
    }

    /// Profile log-likelihood over the weights at p_i = n_i / T_i:
    /// -m2/(2 sigma^2) - n log sigma - sum n_i log T_i(sigma), where m2 is
    /// the raw second moment sum. Constants free of sigma are dropped.
    pub fn profile_loglik(&self, sigma: f64, counts: &[u64], m2: f64, n: u64) -> Result<f64> {
        if !(sigma > 0.0) {
            return Err(Error::domain(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        let probs = self.class_probs(sigma);
        let mut ll = -m2 / (2.0 * sigma * sigma) - n as f64 * sigma.ln();
        for (&c, &t) in counts.iter().zip(&probs) {
            if c > 0 {
                if t <= 0.0 {
                    return Err(Error::Numerical(format!(
                        "class probability underflowed at sigma = {sigma} for an occupied class"
                    )));
                }
                ll -= c as f64 * t.ln();
            }
        }
        Ok(ll)
    }

    /// First and second derivative of the profile log-likelihood.
    fn profile_score(&self, sigma: f64, counts: &[u64], m2: f64, n: u64) -> (f64, f64) {
        let t = self.class_probs(sigma);
        let dt = self.class_prob_dsigma(sigma);
        let d2t = self.class_prob_d2sigma(sigma);
        let nf = n as f64;
        let mut score = m2 / (sigma * sigma * sigma) - nf / sigma;
        let mut second = -3.0 * m2 / (sigma * sigma * sigma * sigma) + nf / (sigma * sigma);
        for i in 0..counts.len() {
            if counts[i] > 0 && t[i] > 0.0 {
                let c = counts[i] as f64;
                let ratio = dt[i] / t[i];
                score -= c * ratio;
                second += c * (ratio * ratio - d2t[i] / t[i]);
            }
        }
        (score, second)
    }

    fn fit_sigma(&self, counts: &[u64], m2: f64, n: u64) -> Result<f64> {
        let rms = (m2 / n as f64).sqrt();
        if !(rms > 0.0) {
            return Err(Error::FitFailed("all observations are zero".into()));
        }
        let upper = 100.0 * rms;

        // Newton from the sample scale
        let mut sigma = rms;
        let mut newton_ok = false;
        for _ in 0..100 {
            let (score, second) = self.profile_score(sigma, counts, m2, n);
            if !score.is_finite() || !second.is_finite() || second >= 0.0 {
                break;
            }
            let step = score / second;
            let next = sigma - step;
            if !(next > 0.0 && next <= upper) {
                break;
            }
            sigma = next;
            if step.abs() < 1e-10 {
                newton_ok = true;
                break;
            }
        }
        if newton_ok {
            return Ok(sigma);
        }

        // Golden-section fallback on the profile itself.
        let obj = |s: f64| {
            self.profile_loglik(s, counts, m2, n)
                .unwrap_or(f64::NEG_INFINITY)
        };
        let (mut lo, mut hi) = (1e-3 * rms, upper);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let mut f1 = obj(x1);
        let mut f2 = obj(x2);
        for _ in 0..300 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = obj(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = obj(x1);
            }
            if hi - lo < 1e-12 * hi {
                break;
            }
        }
        sigma = 0.5 * (lo + hi);
        let (score, second) = self.profile_score(sigma, counts, m2, n);
        if !score.is_finite() {
            return Err(Error::OptimizerFailed(
                "profile likelihood not differentiable at the fallback optimum".into(),
            ));
        }
        // one guarded polish step
        if second < 0.0 {
            let next = sigma - score / second;
            if next > 0.0 && next <= upper {
                sigma = next;
            }
        }
        Ok(sigma)
    }
}

impl ModelFamily for SamplingBias {
    type Params = SamplingBiasParams;

    fn name(&self) -> &'static str {
        "sampling-bias"
    }

    /// sigma plus J weights, minus the non-identifiable common rescaling.
    fn param_count(&self) -> usize {
        self.n_classes()
    }

    fn fit(&self, data: &Data) -> Result<SamplingBiasParams> {
        let s = data.as_sample()?;
        let counts = self.class_counts(s);
        let m2: f64 = s.values().iter().map(|&x| x * x).sum();
        let sigma = self.fit_sigma(&counts, m2, s.len() as u64)?;
        let probs = self.class_probs(sigma);
        let weights = counts
            .iter()
            .zip(&probs)
            .map(|(&c, &t)| if t > 0.0 { c as f64 / t } else { 0.0 })
            .collect();
        Ok(SamplingBiasParams { sigma, weights })
    }

    /// Joint log density: each observation contributes the normal
    /// log-density, the log weight of its class, and minus the log of the
    /// weighted total inclusion probability.
    fn loglik(&self, data: &Data, params: &SamplingBiasParams) -> Result<f64> {
        let s = data.as_sample()?;
        if !(params.sigma > 0.0) {
            return Err(Error::domain("sigma must be positive"));
        }
        let counts = self.class_counts(s);
        let probs = self.class_probs(params.sigma);
        let total_weighted: f64 = probs.iter().zip(&params.weights).map(|(t, p)| t * p).sum();
        if !(total_weighted > 0.0) {
            return Err(Error::Numerical(
                "weighted inclusion probability vanished".into(),
            ));
        }
        let n = s.len() as f64;
        let m2: f64 = s.values().iter().map(|&x| x * x).sum();
        let mut ll = -m2 / (2.0 * params.sigma * params.sigma)
            - n * params.sigma.ln()
            - 0.5 * n * LN_2PI
            - n * total_weighted.ln();
        for (&c, &p) in counts.iter().zip(&params.weights) {
            if c > 0 {
                if p <= 0.0 {
                    return Err(Error::Numerical("occupied class has zero weight".into()));
                }
                ll += c as f64 * p.ln();
            }
        }
        Ok(ll)
    }

    fn cdf(&self, x: f64, params: &SamplingBiasParams) -> f64 {
        let probs = self.class_probs(params.sigma);
        let total: f64 = probs.iter().zip(&params.weights).map(|(t, p)| t * p).sum();
        let mut acc = 0.0;
        for (i, w) in self.boundaries.windows(2).enumerate() {
            if x <= w[0] {
                break;
            }
            if x >= w[1] {
                acc += probs[i] * params.weights[i];
            } else {
                let lo = if w[0] == f64::NEG_INFINITY {
                    0.0
                } else {
                    normal_cdf(w[0] / params.sigma)
                };
                acc += (normal_cdf(x / params.sigma) - lo) * params.weights[i];
            }
        }
        (acc / total).clamp(0.0, 1.0)
    }

    fn simulate(&self, n: usize, params: &SamplingBiasParams, rng: &mut Stream) -> Result<Sample> {
        let max_w = params
            .weights
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if !(max_w > 0.0) {
            return Err(Error::domain("weights must contain a positive entry"));
        }
        let mut values = Vec::with_capacity(n);
        let mut guard = 0usize;
        while values.len() < n {
            let x = params.sigma * rng.standard_normal();
            let accept = params.weights[self.class_of(x)] / max_w;
            if rng.uniform() <= accept {
                values.push(x);
            }
            guard += 1;
            if guard > 10_000 * n.max(1000) {
                return Err(Error::Numerical(
                    "rejection sampler made no progress".into(),
                ));
            }
        }
        Sample::new(values)
    }

    fn param_names(&self) -> Vec<String> {
        vec!["sigma".into(), "sigma_sq".into()]
    }

    fn params_of_interest(&self, params: &SamplingBiasParams) -> Vec<f64> {
        vec![params.sigma, params.sigma * params.sigma]
    }
}
