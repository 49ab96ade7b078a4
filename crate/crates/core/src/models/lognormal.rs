//! Log-normal family with a Value-at-Risk readout: the tracked quantity is
//! the lower tail quantile exp(mu + sigma * z_q) of the fitted
//! distribution, the quantity risk desks call the (1-q) Value at Risk.

use serde::Serialize;

use super::{Data, ModelFamily, Sample};
use crate::error::{Error, Result};
use crate::statdist::{normal_cdf, normal_ln_pdf, normal_quantile, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogNormalParams {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone)]
pub struct LogNormal {
    /// Lower tail probability of the tracked quantile (0.01 for 99% VaR).
    tail: f64,
    var_name: String,
}

impl LogNormal {
    /// Family tracking the Value at Risk at `level` (e.g. 0.99 tracks the
    /// 1st percentile of the fitted distribution).
    pub fn var_level(level: f64) -> Result<Self> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::domain(format!(
                "VaR level must lie in (0,1), got {level}"
            )));
        }
        let pct = level * 100.0;
        let var_name = if (pct - pct.round()).abs() < 1e-9 {
            format!("var{}", pct.round() as u32)
        } else {
            format!("var{pct}")
        };
        Ok(LogNormal {
            tail: 1.0 - level,
            var_name,
        })
    }

    pub fn var_name(&self) -> &str {
        &self.var_name
    }

    /// The tracked quantile exp(mu + sigma * z_tail). With sigma = 0 the
    /// distribution is a point mass and the quantile is exp(mu).
    pub fn value_at_risk(&self, params: &LogNormalParams) -> Result<f64> {
        let z = normal_quantile(self.tail)?;
        Ok((params.mu + params.sigma * z).exp())
    }
}

impl ModelFamily for LogNormal {
    type Params = LogNormalParams;

    fn name(&self) -> &'static str {
        "lognormal"
    }

    fn param_count(&self) -> usize {
        2
    }

    fn fit(&self, data: &Data) -> Result<LogNormalParams> {
        let s = data.as_sample()?;
        if s.values().iter().any(|&x| x <= 0.0) {
            return Err(Error::FitFailed(
                "log-normal fit requires strictly positive observations".into(),
            ));
        }
        let n = s.len() as f64;
        let logs: Vec<f64> = s.values().iter().map(|&x| x.ln()).collect();
        let mu = logs.iter().sum::<f64>() / n;
        let sigma = (logs.iter().map(|&l| (l - mu) * (l - mu)).sum::<f64>() / n).sqrt();
        Ok(LogNormalParams { mu, sigma })
    }

    fn loglik(&self, data: &Data, params: &LogNormalParams) -> Result<f64> {
        match data {
            Data::Individual(s) => {
                if params.sigma <= 0.0 {
                    return Err(Error::domain("log-normal log-likelihood needs sigma > 0"));
                }
                Ok(s.values()
                    .iter()
                    .map(|&x| normal_ln_pdf(x.ln(), params.mu, params.sigma) - x.ln())
                    .sum())
            }
            Data::Grouped(g) => super::grouped_loglik(self, g, params),
        }
    }

    fn cdf(&self, x: f64, params: &LogNormalParams) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if params.sigma == 0.0 {
            return if x.ln() >= params.mu { 1.0 } else { 0.0 };
        }
        normal_cdf((x.ln() - params.mu) / params.sigma)
    }

    fn quantile(&self, p: f64, params: &LogNormalParams) -> Option<f64> {
        normal_quantile(p)
            .ok()
            .map(|z| (params.mu + params.sigma * z).exp())
    }

    fn support(&self, _params: &LogNormalParams) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn simulate(&self, n: usize, params: &LogNormalParams, rng: &mut Stream) -> Result<Sample> {
        Sample::new(
            (0..n)
                .map(|_| (params.mu + params.sigma * rng.standard_normal()).exp())
                .collect(),
        )
    }

    fn param_names(&self) -> Vec<String> {
        vec!["mu".into(), "sigma".into(), self.var_name.clone()]
    }

    fn params_of_interest(&self, params: &LogNormalParams) -> Vec<f64> {
        let var = self
            .value_at_risk(params)
            .expect("tail probability validated at construction");
        vec![params.mu, params.sigma, var]
    }
}
