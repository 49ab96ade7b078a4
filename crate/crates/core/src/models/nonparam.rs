//! Order-statistic confidence interval for a population quantile. The
//! count of observations below the q-quantile is Binomial(n, q); an
//! equal-tailed interval [n_l, n_u] for that count turns the n_l-th and
//! (n_u + 1)-th order statistics into a confidence interval for the
//! quantile itself.

use crate::error::{Error, Result};
use crate::models::Sample;
use crate::statdist::binomial_cdf;

/// Interval for the q-quantile at the given coverage. Indices that fall
/// outside 1..n clamp to the sample extremes.
pub fn nonparametric_percentile_ci(sample: &Sample, q: f64, coverage: f64) -> Result<(f64, f64)> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!(
            "quantile level must lie in (0,1), got {q}"
        )));
    }
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(Error::domain(format!(
            "coverage must lie in (0,1), got {coverage}"
        )));
    }
    let n = sample.len();
    if (n as f64) < 1.0 / q.min(1.0 - q) {
        return Err(Error::domain(format!(
            "sample of size {n} is too small for the {q} quantile; the required order statistics do not exist"
        )));
    }
    let tail = 0.5 * (1.0 - coverage);
    let (n_l, n_u) = binomial_equal_tailed(n as u64, q, tail)?;
    let sorted = sample.sorted();
    let lower_idx = n_l.max(1) as usize; // 1-based
    let upper_idx = ((n_u + 1) as usize).min(n); // 1-based, clamped
    Ok((sorted[lower_idx - 1], sorted[upper_idx - 1]))
}

/// Equal-tailed interval [n_l, n_u] for a Binomial(n, p) count:
/// n_l is the largest k with P(X < k) <= tail, n_u the smallest k with
/// P(X > k) <= tail.
pub fn binomial_equal_tailed(n: u64, p: f64, tail: f64) -> Result<(u64, u64)> {
    // largest k in [0, n] with cdf(k - 1) <= tail, by bisection on the
    // nondecreasing cdf
    let mut lo = 0u64;
    let mut hi = n;
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if binomial_cdf(mid as i64 - 1, n, p)? <= tail {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let n_l = lo;

    // smallest k in [0, n] with cdf(k) >= 1 - tail
    let mut lo = 0u64;
    let mut hi = n;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if binomial_cdf(mid as i64, n, p)? >= 1.0 - tail {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok((n_l, lo))
}
