//! Seedable random streams.
//!
//! The generator is xoshiro256** seeded through a SplitMix64 expansion, so
//! identical `(seed, index)` pairs produce identical streams on every
//! platform and under any thread count. Parallel consumers never share a
//! stream; each trial or replicate receives its own via [`substream`].

use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix_next(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and an index. Used to give each
/// simulated dataset or engine run its own independent seed space.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ GOLDEN).wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03)))
}

/// Deterministic mixing of `(seed, index)` into an independent stream.
pub fn substream(seed: u64, index: u64) -> Stream {
    Stream::from_seed(derive_seed(seed, index))
}

/// A self-contained random stream with the samplers the simulations need.
#[derive(Debug, Clone)]
pub struct Stream {
    s: [u64; 4],
    spare_normal: Option<f64>,
}

impl Stream {
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = seed;
        let mut s = [0u64; 4];
        for w in s.iter_mut() {
            *w = splitmix_next(&mut sm);
        }
        // xoshiro must not start from the all-zero state
        if s == [0, 0, 0, 0] {
            s[0] = GOLDEN;
        }
        Stream {
            s,
            spare_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform draw in (0, 1].
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform integer in [0, n) without modulo bias.
    pub fn uniform_int(&mut self, n: u64) -> u64 {
        assert!(n > 0, "uniform_int needs n > 0");
        let threshold = n.wrapping_neg() % n;
        loop {
            let v = self.next_u64();
            if v >= threshold {
                return v % n;
            }
        }
    }

    /// Standard normal draw via Box-Muller; the paired value is cached.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normal(&mut self, mu: f64, sigma: f64) -> Result<f64> {
        if !(sigma > 0.0) {
            return Err(Error::domain(format!(
                "normal sampler needs sigma > 0, got {sigma}"
            )));
        }
        Ok(mu + sigma * self.standard_normal())
    }

    pub fn lognormal(&mut self, mu: f64, sigma: f64) -> Result<f64> {
        if !(sigma > 0.0) {
            return Err(Error::domain(format!(
                "lognormal sampler needs sigma > 0, got {sigma}"
            )));
        }
        Ok((mu + sigma * self.standard_normal()).exp())
    }

    /// Type-1 Pareto draw with survival S(x) = (x/eta)^(-alpha) on x >= eta.
    pub fn pareto1(&mut self, alpha: f64, eta: f64) -> Result<f64> {
        if !(alpha > 0.0 && eta > 0.0) {
            return Err(Error::domain(format!(
                "pareto1 sampler needs alpha > 0 and eta > 0, got alpha={alpha} eta={eta}"
            )));
        }
        Ok(eta * self.uniform().powf(-1.0 / alpha))
    }

    pub fn bernoulli(&mut self, p: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!(
                "bernoulli p must lie in [0,1], got {p}"
            )));
        }
        Ok(self.uniform() <= p)
    }

    /// Categorical draw over `probs`, which must sum to 1 within 1e-12.
    pub fn categorical(&mut self, probs: &[f64]) -> Result<usize> {
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 || probs.iter().any(|&p| p < 0.0) {
            return Err(Error::domain(
                "categorical probabilities must be nonnegative and sum to 1",
            ));
        }
        let u = self.uniform();
        let mut cum = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            cum += p;
            if u <= cum {
                return Ok(i);
            }
        }
        Ok(probs.len() - 1)
    }
}
