//! Type-1 Pareto family: survival S(x) = (x/eta)^(-alpha) on x >= eta with
//! the lower limit eta known. Individual data has a closed-form MLE;
//! grouped data maximizes the multinomial likelihood in one dimension.

use super::{Data, ModelFamily, Sample};
use crate::adequacy::GroupedData;
use crate::error::{Error, Result};
use crate::statdist::Stream;

#[derive(Debug, Clone)]
pub struct Pareto1 {
    eta: f64,
}

impl Pareto1 {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::domain(format!(
                "pareto lower limit must be positive, got {eta}"
            )));
        }
        Ok(Pareto1 { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    fn fit_individual(&self, s: &Sample) -> Result<f64> {
        // tolerate representation noise right at the lower limit
        let slack = self.eta * (1.0 - 1e-12);
        if s.values().iter().any(|&x| x < slack) {
            return Err(Error::FitFailed(format!(
                "observations below the lower limit {} cannot come from this family",
                self.eta
            )));
        }
        let log_sum: f64 = s
            .values()
            .iter()
            .map(|&x| (x / self.eta).max(1.0).ln())
            .sum();
        if log_sum <= 0.0 {
            return Err(Error::FitFailed(
                "all observations sit at the lower limit; the exponent is unbounded".into(),
            ));
        }
        Ok(s.len() as f64 / log_sum)
    }

    fn fit_grouped(&self, g: &GroupedData) -> Result<f64> {
        let b = g.boundaries();
        let base = b[0];
        if !(base > 0.0 && base.is_finite()) {
            return Err(Error::FitFailed(
                "grouped Pareto fit needs a finite positive first boundary".into(),
            ));
        }
        if base < self.eta * (1.0 - 1e-12) {
            return Err(Error::FitFailed(format!(
                "grouped classes start below the lower limit {}",
                self.eta
            )));
        }
        let counts = g.counts();
        let occupied: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] > 0).collect();
        if occupied.iter().all(|&i| i == 0) {
            return Err(Error::FitFailed(
                "all mass in the first class; the exponent is unbounded".into(),
            ));
        }

        // log-likelihood of the counts at exponent alpha, classes
        // conditioned on x >= base
        let ll = |alpha: f64| -> f64 {
            let surv = |x: f64| -> f64 {
                if x == f64::INFINITY {
                    0.0
                } else {
                    (x / base).powf(-alpha)
                }
            };
            let norm = 1.0 - surv(*b.last().unwrap());
            let mut total = 0.0;
            for &i in &occupied {
                let p = (surv(b[i]) - surv(b[i + 1])) / norm;
                if p <= 0.0 || !p.is_finite() {
                    return f64::NEG_INFINITY;
                }
                total += counts[i] as f64 * p.ln();
            }
            total
        };

        // bracket the maximum on a log-spaced grid, then golden-section
        let grid: Vec<f64> = (0..=120)
            .map(|i| 10f64.powf(-6.0 + 0.1 * i as f64))
            .collect();
        let mut best = 0usize;
        let mut best_ll = f64::NEG_INFINITY;
        for (i, &a) in grid.iter().enumerate() {
            let v = ll(a);
            if v > best_ll {
                best_ll = v;
                best = i;
            }
        }
        if best_ll == f64::NEG_INFINITY {
            return Err(Error::FitFailed(
                "grouped Pareto likelihood is degenerate".into(),
            ));
        }
        if best == 0 || best == grid.len() - 1 {
            return Err(Error::FitFailed(
                "grouped Pareto exponent estimate is unbounded (maximum at the search edge)".into(),
            ));
        }
        let (mut lo, mut hi) = (grid[best - 1], grid[best + 1]);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let mut f1 = ll(x1);
        let mut f2 = ll(x2);
        for _ in 0..200 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = ll(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = ll(x1);
            }
            if hi - lo < 1e-11 * hi.max(1.0) {
                break;
            }
        }
        let mut alpha = 0.5 * (lo + hi);
        // Newton polish on the score (numeric derivatives of ll)
        for _ in 0..8 {
            let h = 1e-6 * alpha.max(1e-6);
            let g1 = (ll(alpha + h) - ll(alpha - h)) / (2.0 * h);
            let g2 = (ll(alpha + h) - 2.0 * ll(alpha) + ll(alpha - h)) / (h * h);
            if !g1.is_finite() || !g2.is_finite() || g2 >= 0.0 {
                break;
            }
            let step = g1 / g2;
            let next = alpha - step;
            if !(next > 0.0) {
                break;
            }
            alpha = next;
            if step.abs() < 1e-12 * alpha {
                break;
            }
        }
        Ok(alpha)
    }
}

impl ModelFamily for Pareto1 {
    type Params = f64; // alpha

    fn name(&self) -> &'static str {
        "pareto1"
    }

    fn param_count(&self) -> usize {
        1
    }

    fn fit(&self, data: &Data) -> Result<f64> {
        match data {
            Data::Individual(s) => self.fit_individual(s),
            Data::Grouped(g) => self.fit_grouped(g),
        }
    }

    fn loglik(&self, data: &Data, alpha: &f64) -> Result<f64> {
        match data {
            Data::Individual(s) => {
                if s.values().iter().any(|&x| x < self.eta * (1.0 - 1e-12)) {
                    return Err(Error::domain("observation below the lower limit"));
                }
                // density alpha * eta^alpha * x^-(alpha+1) on x >= eta
                let n = s.len() as f64;
                let log_sum: f64 = s
                    .values()
                    .iter()
                    .map(|&x| (x / self.eta).max(1.0).ln())
                    .sum();
                Ok(n * alpha.ln() - (alpha + 1.0) * log_sum - n * self.eta.ln())
            }
            Data::Grouped(g) => super::grouped_loglik(self, g, alpha),
        }
    }

    fn cdf(&self, x: f64, alpha: &f64) -> f64 {
        if x <= self.eta {
            0.0
        } else {
            1.0 - (x / self.eta).powf(-alpha)
        }
    }

    fn quantile(&self, p: f64, alpha: &f64) -> Option<f64> {
        if !(0.0..1.0).contains(&p) {
            return None;
        }
        Some(self.eta * (1.0 - p).powf(-1.0 / alpha))
    }

    fn support(&self, _alpha: &f64) -> (f64, f64) {
        (self.eta, f64::INFINITY)
    }

    fn simulate(&self, n: usize, alpha: &f64, rng: &mut Stream) -> Result<Sample> {
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(rng.pareto1(*alpha, self.eta)?);
        }
        Sample::new(values)
    }

    fn param_names(&self) -> Vec<String> {
        vec!["alpha".into()]
    }

    fn params_of_interest(&self, alpha: &f64) -> Vec<f64> {
        vec![*alpha]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn individual_mle_closed_form() {
        // all observations at e * eta make the mean log ratio 1
        let eta = 2.0;
        let fam = Pareto1::new(eta).unwrap();
        let x = std::f64::consts::E * eta;
        let data = Data::Individual(Sample::new(vec![x; 9]).unwrap());
        let alpha = fam.fit(&data).unwrap();
        assert!((alpha - 1.0).abs() < 1e-12);
    }

    #[test]
    fn individual_rejects_below_limit() {
        let fam = Pareto1::new(1.0).unwrap();
        let data = Data::Individual(Sample::new(vec![0.5, 2.0]).unwrap());
        assert!(fam.fit(&data).is_err());
    }

    #[test]
    fn all_at_limit_is_unbounded() {
        let fam = Pareto1::new(1.0).unwrap();
        let data = Data::Individual(Sample::new(vec![1.0, 1.0, 1.0]).unwrap());
        assert!(fam.fit(&data).is_err());
    }

    #[test]
    fn grouped_fit_recovers_exact_class_probabilities() {
        // boundaries 1, sqrt(2), 2, inf under alpha = 2 give class
        // probabilities 1/2, 1/4, 1/4
        let g = GroupedData::new(
            vec![1.0, std::f64::consts::SQRT_2, 2.0, f64::INFINITY],
            vec![500, 250, 250],
        )
        .unwrap();
        let fam = Pareto1::new(1.0).unwrap();
        let alpha = fam.fit(&Data::Grouped(g)).unwrap();
        assert!((alpha - 2.0).abs() < 1e-6, "alpha = {alpha}");
    }

    #[test]
    fn grouped_all_first_class_is_unbounded() {
        let g = GroupedData::new(vec![1.0, 2.0, f64::INFINITY], vec![100, 0]).unwrap();
        let fam = Pareto1::new(1.0).unwrap();
        assert!(fam.fit(&Data::Grouped(g)).is_err());
    }

    #[test]
    fn grouped_limit_matches_individual_mle() {
        // singleton classes around each observation approach the
        // individual-data likelihood
        let fam = Pareto1::new(1.0).unwrap();
        let mut rng = crate::statdist::substream(55, 0);
        let sample = fam.simulate(20, &1.3, &mut rng).unwrap();
        let alpha_ind = fam.fit(&Data::Individual(sample.clone())).unwrap();

        let mut xs = sample.sorted();
        xs.dedup();
        let delta = 1e-7;
        let mut boundaries = vec![1.0];
        let mut counts = Vec::new();
        for &x in &xs {
            let lo = x * (1.0 - delta);
            let hi = x * (1.0 + delta);
            if lo > *boundaries.last().unwrap() {
                boundaries.push(lo);
                counts.push(0); // gap class
            }
            boundaries.push(hi);
            let c = sample.values().iter().filter(|&&v| v == x).count() as u64;
            counts.push(c);
        }
        boundaries.push(f64::INFINITY);
        counts.push(0);
        let g = GroupedData::new(boundaries, counts).unwrap();
        let alpha_grp = fam.fit(&Data::Grouped(g)).unwrap();
        assert!(
            (alpha_grp - alpha_ind).abs() < 1e-4,
            "individual {alpha_ind} grouped {alpha_grp}"
        );
    }

    #[test]
    fn quantile_inverts_cdf() {
        let fam = Pareto1::new(3.0).unwrap();
        for i in 1..10 {
            let p = i as f64 / 10.0;
            let q = fam.quantile(p, &1.7).unwrap();
            assert!((fam.cdf(q, &1.7) - p).abs() < 1e-12);
        }
    }
}
