//! Theoretical coverage and adequate-size calculators.
//!
//! The quadratic framework partitions the information matrix into blocks
//! for distortion inside the fitted family (dimension m) and outside it
//! (dimension k). Two divergences drive everything: `a2` measures how far
//! the data model sits from its best in-family approximation (twice the KL
//! divergence), and `b2` measures how far that approximation sits from the
//! true parameters. The interval covers whenever c_m * a2 >= c_k * b2.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::statdist::{chi2_quantile, f_cdf, normal_quantile, Stream};

const CONDITION_LIMIT: f64 = 1e12;

/// Partitioned information matrix H = [[H11, H12], [H21, H22]] with
/// H21 = H12'. H11 covers the m in-family directions, H22 the k
/// out-of-family directions.
#[derive(Debug, Clone)]
pub struct FisherBlocks {
    pub h11: Mat,
    pub h12: Mat,
    pub h22: Mat,
}

impl FisherBlocks {
    pub fn new(h11: Mat, h12: Mat, h22: Mat) -> Result<Self> {
        if !h11.is_square() || !h22.is_square() {
            return Err(Error::InvalidConfig("H11 and H22 must be square".into()));
        }
        if h12.rows() != h11.rows() || h12.cols() != h22.rows() {
            return Err(Error::InvalidConfig("H12 must be m x k".into()));
        }
        Ok(FisherBlocks { h11, h12, h22 })
    }

    pub fn m(&self) -> usize {
        self.h11.rows()
    }

    pub fn k(&self) -> usize {
        self.h22.rows()
    }

    /// Full (m+k) x (m+k) matrix, for tests and eigen checks.
    pub fn full(&self) -> Mat {
        let (m, k) = (self.m(), self.k());
        Mat::from_fn(m + k, m + k, |i, j| match (i < m, j < m) {
            (true, true) => self.h11[(i, j)],
            (true, false) => self.h12[(i, j - m)],
            (false, true) => self.h12[(j, i - m)],
            (false, false) => self.h22[(i - m, j - m)],
        })
    }

    /// Schur complement H22 - H21 H11^{-1} H12, the matrix whose quadratic
    /// form in the distortion sets the adequate bootstrap size.
    pub fn schur_complement(&self) -> Result<Mat> {
        self.check_h11()?;
        let (m, k) = (self.m(), self.k());
        // columns of H11^{-1} H12
        let mut inv_h12 = Mat::zeros(m, k);
        for j in 0..k {
            let col: Vec<f64> = (0..m).map(|i| self.h12[(i, j)]).collect();
            let sol = self.h11.solve_spd(&col)?;
            for i in 0..m {
                inv_h12[(i, j)] = sol[i];
            }
        }
        Ok(self.h22.sub(&self.h12.transpose().matmul(&inv_h12)))
    }

    fn check_h11(&self) -> Result<()> {
        let cond = self.h11.sym_condition();
        if !cond.is_finite() || cond > CONDITION_LIMIT {
            return Err(Error::Numerical(format!(
                "H11 is numerically singular (condition estimate {cond:.3e})"
            )));
        }
        Ok(())
    }
}

/// The pair (A^2, B^2) for one distortion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergencePair {
    pub a2: f64,
    pub b2: f64,
}

/// Evaluate A^2 = x2' (H22 - H21 H11^{-1} H12) x2 and
/// B^2 = x1' H11 x1 + 2 x1' H12 x2 + x2' (H21 H11^{-1} H12) x2.
pub fn divergences(blocks: &FisherBlocks, x1: &[f64], x2: &[f64]) -> Result<DivergencePair> {
    if x1.len() != blocks.m() || x2.len() != blocks.k() {
        return Err(Error::InvalidConfig(
            "distortion dimensions do not match the blocks".into(),
        ));
    }
    blocks.check_h11()?;
    let v = blocks.h12.matvec(x2); // H12 x2, length m
    let u = blocks.h11.solve_spd(&v)?; // H11^{-1} H12 x2
    let vu: f64 = v.iter().zip(&u).map(|(a, b)| a * b).sum();
    let a2 = blocks.h22.quad_form(x2) - vu;
    let b2 =
        blocks.h11.quad_form(x1) + 2.0 * x1.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() + vu;
    // tiny negatives are rounding of PSD forms
    let clamp = |t: f64| if t < 0.0 && t > -1e-9 { 0.0 } else { t };
    let (a2, b2) = (clamp(a2), clamp(b2));
    if a2 < 0.0 || b2 < 0.0 {
        return Err(Error::Numerical(format!(
            "negative divergence (a2={a2}, b2={b2})"
        )));
    }
    Ok(DivergencePair { a2, b2 })
}

/// Coverage under identity-information distortion: the probability that an
/// F(m, k) variate is at most k*c_m / (m*c_k), with c_m the chi-square
/// critical value at `ci_level` on m df and c_k the critical value of the
/// adequacy test (level 1 - adequacy_alpha) on k df.
pub fn coverage_fisher(m: u32, k: u32, adequacy_alpha: f64, ci_level: f64) -> Result<f64> {
    if m == 0 || k == 0 {
        return Err(Error::domain("coverage_fisher needs m, k >= 1"));
    }
    let c_m = chi2_quantile(ci_level, m)?;
    let c_k = chi2_quantile(1.0 - adequacy_alpha, k)?;
    f_cdf(k as f64 * c_m / (m as f64 * c_k), m, k)
}

/// Monte Carlo coverage estimate with binomial standard error.
#[derive(Debug, Clone, Copy)]
pub struct CoverageEstimate {
    pub coverage: f64,
    pub std_error: f64,
    pub reps: usize,
}

/// Monte Carlo coverage under an arbitrary distortion sampler: the
/// frequency of c_m * A^2 >= c_k * B^2. A^2 = 0 means the fitted family is
/// exactly right, the adequate size saturates, and the standard bootstrap
/// covers; it counts as covered. Critical values use the block dimensions
/// as degrees of freedom; rank-deficient blocks (null directions in H22)
/// need the caller to pick the effective dimensions instead.
pub fn coverage_general(
    blocks: &FisherBlocks,
    mut draw: impl FnMut(&mut Stream) -> (Vec<f64>, Vec<f64>),
    adequacy_alpha: f64,
    ci_level: f64,
    mc_reps: usize,
    rng: &mut Stream,
) -> Result<CoverageEstimate> {
    if mc_reps < 1000 {
        return Err(Error::InvalidConfig(
            "coverage_general needs mc_reps >= 1000".into(),
        ));
    }
    let c_m = chi2_quantile(ci_level, blocks.m() as u32)?;
    let c_k = chi2_quantile(1.0 - adequacy_alpha, blocks.k() as u32)?;
    let mut covered = 0usize;
    for _ in 0..mc_reps {
        let (x1, x2) = draw(rng);
        let d = divergences(blocks, &x1, &x2)?;
        if d.a2 == 0.0 || c_m * d.a2 >= c_k * d.b2 {
            covered += 1;
        }
    }
    let p = covered as f64 / mc_reps as f64;
    Ok(CoverageEstimate {
        coverage: p,
        std_error: (p * (1.0 - p) / mc_reps as f64).sqrt(),
        reps: mc_reps,
    })
}

/// Information blocks of the sampling-bias family at the null point
/// (sigma = 1, all weights equal), with class boundaries at the i/J normal
/// percentiles. H11 = [2]; H12_i = (c_{i-1} e^{-c_{i-1}^2/2} -
/// c_i e^{-c_i^2/2}) / sqrt(2 pi); H22 = I/J - 11'/J^2. Terms at infinite
/// boundaries vanish.
pub fn sampling_bias_hessian(j: usize) -> Result<FisherBlocks> {
    if j < 2 {
        return Err(Error::domain("sampling-bias hessian needs J >= 2"));
    }
    let edges = sampling_bias_boundaries(j)?;
    let u = |c: f64| -> f64 {
        if c.is_infinite() {
            0.0
        } else {
            c * (-0.5 * c * c).exp()
        }
    };
    let root_2pi = (2.0 * std::f64::consts::PI).sqrt();
    let h11 = Mat::from_rows(&[&[2.0]]);
    let h12 = Mat::from_fn(1, j, |_, i| (u(edges[i]) - u(edges[i + 1])) / root_2pi);
    let jf = j as f64;
    let h22 = Mat::from_fn(j, j, |a, b| {
        let base = -1.0 / (jf * jf);
        if a == b {
            base + 1.0 / jf
        } else {
            base
        }
    });
    FisherBlocks::new(h11, h12, h22)
}

/// Boundaries c_0 = -inf, c_i = Phi^{-1}(i/J), c_J = +inf.
pub fn sampling_bias_boundaries(j: usize) -> Result<Vec<f64>> {
    if j < 2 {
        return Err(Error::domain("need at least two classes"));
    }
    let mut edges = Vec::with_capacity(j + 1);
    edges.push(f64::NEG_INFINITY);
    for i in 1..j {
        edges.push(normal_quantile(i as f64 / j as f64)?);
    }
    edges.push(f64::INFINITY);
    Ok(edges)
}

/// The scalar H21 H11^{-1} H12 for the sampling-bias blocks (H11 is 1x1).
fn sampling_bias_h_term(blocks: &FisherBlocks) -> f64 {
    let mut s = 0.0;
    for i in 0..blocks.k() {
        s += blocks.h12[(0, i)] * blocks.h12[(0, i)];
    }
    s / blocks.h11[(0, 0)]
}

/// Closed-form coverage of the sampling-bias simulation: the probability
/// that an F(J-2, 1) variate exceeds
/// (J (c_{J-1} + c_1) H11^{-1} H12 H21 - c_1) / ((J-2) c_1).
/// Nonpositive thresholds give coverage 1.
pub fn sampling_bias_coverage(j: usize, alpha: f64) -> Result<f64> {
    if j < 3 {
        return Err(Error::domain("sampling-bias coverage needs J >= 3"));
    }
    let blocks = sampling_bias_hessian(j)?;
    let q = sampling_bias_h_term(&blocks);
    let c_1 = chi2_quantile(1.0 - alpha, 1)?;
    let c_j1 = chi2_quantile(1.0 - alpha, (j - 1) as u32)?;
    let jf = j as f64;
    let threshold = (jf * (c_j1 + c_1) * q - c_1) / ((jf - 2.0) * c_1);
    if threshold <= 0.0 {
        Ok(1.0)
    } else {
        Ok(1.0 - f_cdf(threshold, (j - 2) as u32, 1)?)
    }
}

/// The distinguished Schur eigenvalue 1/J - H21 H11^{-1} H12 and the
/// repeated eigenvalue 1/J for the sampling-bias blocks.
pub fn sampling_bias_eigen_coefficients(j: usize) -> Result<(f64, f64)> {
    let blocks = sampling_bias_hessian(j)?;
    let q = sampling_bias_h_term(&blocks);
    Ok((1.0 / j as f64 - q, 1.0 / j as f64))
}

/// Theoretical adequate bootstrap size c_{J-1} / (x2' S x2) with S the
/// Schur complement. Distortions in the null (rescaling) direction make
/// the quadratic form vanish; the size is then reported as infinite.
pub fn sampling_bias_theoretical_size(j: usize, x2: &[f64], alpha: f64) -> Result<f64> {
    if x2.len() != j {
        return Err(Error::InvalidConfig(format!("x2 must have length J = {j}")));
    }
    let blocks = sampling_bias_hessian(j)?;
    let schur = blocks.schur_complement()?;
    let denom = schur.quad_form(x2);
    let scale: f64 = x2.iter().map(|v| v * v).sum();
    if denom <= 1e-12 * scale.max(1e-300) {
        return Ok(f64::INFINITY);
    }
    Ok(chi2_quantile(1.0 - alpha, (j - 1) as u32)? / denom)
}

/// Convergence check of the F-coverage toward the nominal CI level as the
/// adequacy test gains degrees of freedom. Returns the k = 10^4 value.
pub fn coverage_limit_check(m: u32) -> Result<f64> {
    let mut last = 0.0;
    for k in [100u32, 1_000, 10_000] {
        last = coverage_fisher(m, k, 0.05, 0.95)?;
    }
    Ok(last)
}

/// The m x k grid of F-coverages as a TSV table rounded to 3 decimals,
/// rows indexed by k and columns by m.
pub fn coverage_table_tsv(
    adequacy_alpha: f64,
    ci_level: f64,
    max_m: u32,
    max_k: u32,
) -> Result<String> {
    let mut out = String::from("k\\m");
    for m in 1..=max_m {
        out.push_str(&format!("\t{m}"));
    }
    out.push('\n');
    for k in 1..=max_k {
        out.push_str(&k.to_string());
        for m in 1..=max_m {
            out.push_str(&format!(
                "\t{:.3}",
                coverage_fisher(m, k, adequacy_alpha, ci_level)?
            ));
        }
        out.push('\n');
    }
    Ok(out)
}
