//! Normal families with one parameter held fixed, matching the two
//! simulation designs: estimate the mean with known scale, or the scale
//! with known mean. Keeping the known parameter out of the family keeps
//! the degrees-of-freedom bookkeeping in the adequacy tests exact.

use super::{Data, ModelFamily, Sample};
use crate::error::{Error, Result};
use crate::statdist::{normal_cdf, normal_ln_pdf, normal_quantile, Stream};

/// Normal family with known standard deviation; the mean is estimated.
#[derive(Debug, Clone)]
pub struct NormalKnownVar {
    sigma: f64,
}

impl NormalKnownVar {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::domain(format!(
                "known sigma must be positive, got {sigma}"
            )));
        }
        Ok(NormalKnownVar { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl ModelFamily for NormalKnownVar {
    type Params = f64; // the mean

    fn name(&self) -> &'static str {
        "normal-known-var"
    }

    fn param_count(&self) -> usize {
        1
    }

    fn fit(&self, data: &Data) -> Result<f64> {
        Ok(data.as_sample()?.mean())
    }

    fn loglik(&self, data: &Data, mean: &f64) -> Result<f64> {
        match data {
            Data::Individual(s) => Ok(s
                .values()
                .iter()
                .map(|&x| normal_ln_pdf(x, *mean, self.sigma))
                .sum()),
            Data::Grouped(g) => super::grouped_loglik(self, g, mean),
        }
    }

    fn cdf(&self, x: f64, mean: &f64) -> f64 {
        normal_cdf((x - mean) / self.sigma)
    }

    fn quantile(&self, p: f64, mean: &f64) -> Option<f64> {
        normal_quantile(p).ok().map(|z| mean + self.sigma * z)
    }

    fn simulate(&self, n: usize, mean: &f64, rng: &mut Stream) -> Result<Sample> {
        Sample::new(
            (0..n)
                .map(|_| mean + self.sigma * rng.standard_normal())
                .collect(),
        )
    }

    fn param_names(&self) -> Vec<String> {
        vec!["mean".into()]
    }

    fn params_of_interest(&self, mean: &f64) -> Vec<f64> {
        vec![*mean]
    }
}

/// Normal family with known mean; the scale is estimated. Reports both
/// sigma and sigma^2 so interval widths can be compared on the variance
/// scale.
#[derive(Debug, Clone)]
pub struct NormalKnownMean {
    mean: f64,
}

impl NormalKnownMean {
    pub fn new(mean: f64) -> Self {
        NormalKnownMean { mean }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }
}

impl ModelFamily for NormalKnownMean {
    type Params = f64; // sigma

    fn name(&self) -> &'static str {
        "normal-known-mean"
    }

    fn param_count(&self) -> usize {
        1
    }

    fn fit(&self, data: &Data) -> Result<f64> {
        let s = data.as_sample()?;
        let m2 = s
            .values()
            .iter()
            .map(|&x| (x - self.mean) * (x - self.mean))
            .sum::<f64>()
            / s.len() as f64;
        if m2 <= 0.0 {
            return Err(Error::FitFailed(
                "all observations equal the known mean; scale is not identifiable".into(),
            ));
        }
        Ok(m2.sqrt())
    }

    fn loglik(&self, data: &Data, sigma: &f64) -> Result<f64> {
        match data {
            Data::Individual(s) => Ok(s
                .values()
                .iter()
                .map(|&x| normal_ln_pdf(x, self.mean, *sigma))
                .sum()),
            Data::Grouped(g) => super::grouped_loglik(self, g, sigma),
        }
    }

    fn cdf(&self, x: f64, sigma: &f64) -> f64 {
        normal_cdf((x - self.mean) / sigma)
    }

    fn quantile(&self, p: f64, sigma: &f64) -> Option<f64> {
        normal_quantile(p).ok().map(|z| self.mean + sigma * z)
    }

    fn simulate(&self, n: usize, sigma: &f64, rng: &mut Stream) -> Result<Sample> {
        Sample::new(
            (0..n)
                .map(|_| self.mean + sigma * rng.standard_normal())
                .collect(),
        )
    }

    fn param_names(&self) -> Vec<String> {
        vec!["sigma".into(), "sigma_sq".into()]
    }

    fn params_of_interest(&self, sigma: &f64) -> Vec<f64> {
        vec![*sigma, sigma * sigma]
    }
}

/// Normal family with both parameters free. Serves as the nested
/// alternative in likelihood-ratio adequacy tests of the known-parameter
/// variants.
#[derive(Debug, Clone, Default)]
pub struct NormalFull;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NormalParams {
    pub mean: f64,
    pub sigma: f64,
}

impl ModelFamily for NormalFull {
    type Params = NormalParams;

    fn name(&self) -> &'static str {
        "normal"
    }

    fn param_count(&self) -> usize {
        2
    }

    fn fit(&self, data: &Data) -> Result<NormalParams> {
        let s = data.as_sample()?;
        let mean = s.mean();
        let var = s
            .values()
            .iter()
            .map(|&x| (x - mean) * (x - mean))
            .sum::<f64>()
            / s.len() as f64;
        if var <= 0.0 {
            return Err(Error::FitFailed(
                "sample is constant; scale is not identifiable".into(),
            ));
        }
        Ok(NormalParams {
            mean,
            sigma: var.sqrt(),
        })
    }

    fn loglik(&self, data: &Data, p: &NormalParams) -> Result<f64> {
        match data {
            Data::Individual(s) => Ok(s
                .values()
                .iter()
                .map(|&x| normal_ln_pdf(x, p.mean, p.sigma))
                .sum()),
            Data::Grouped(g) => super::grouped_loglik(self, g, p),
        }
    }

    fn cdf(&self, x: f64, p: &NormalParams) -> f64 {
        normal_cdf((x - p.mean) / p.sigma)
    }

    fn quantile(&self, prob: f64, p: &NormalParams) -> Option<f64> {
        normal_quantile(prob).ok().map(|z| p.mean + p.sigma * z)
    }

    fn simulate(&self, n: usize, p: &NormalParams, rng: &mut Stream) -> Result<Sample> {
        Sample::new(
            (0..n)
                .map(|_| p.mean + p.sigma * rng.standard_normal())
                .collect(),
        )
    }

    fn param_names(&self) -> Vec<String> {
        vec!["mean".into(), "sigma".into()]
    }

    fn params_of_interest(&self, p: &NormalParams) -> Vec<f64> {
        vec![p.mean, p.sigma]
    }
}
