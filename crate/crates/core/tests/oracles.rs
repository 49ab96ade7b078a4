//! Oracle-equivalence checks for the distribution layer and the model
//! fits: every value here is computed by an independent route (series,
//! quadrature, Monte Carlo, enumeration) before being compared.

mod common;

use adeqboot_core::models::{Data, ModelFamily, Pareto1, Sample, SamplingBias};
use adeqboot_core::statdist::{
    chi2_cdf, chi2_quantile, f_cdf, noncentral_chi2_cdf, noncentral_chi2_median_lambda, normal_cdf,
    normal_quantile, substream,
};
use adeqboot_core::theory::sampling_bias_boundaries;

#[test]
fn normal_cdf_matches_series_erf() {
    // includes the 97.5% point 1.959963985
    for &x in &[-4.0, -2.5, -1.0, -0.1, 0.0, 0.3, 1.0, 1.959963985, 3.0, 5.0] {
        let oracle = common::normal_cdf_series(x);
        assert!(
            (normal_cdf(x) - oracle).abs() < 1e-12,
            "x={x}: {} vs {oracle}",
            normal_cdf(x)
        );
    }
    assert!((normal_cdf(1.959963985) - 0.975).abs() < 1e-9);
}

#[test]
fn chi2_cdf_matches_recurrence_oracle() {
    for &df in &[1u32, 2, 3, 5, 9, 20] {
        for &x in &[0.1, 0.5, 1.0, 3.0, 7.0, 15.0, 30.0] {
            let oracle = common::chi2_cdf_recurrence(x, df);
            let got = chi2_cdf(x, df).unwrap();
            assert!(
                (got - oracle).abs() < 1e-10,
                "df={df} x={x}: {got} vs {oracle}"
            );
        }
    }
}

#[test]
fn chi2_quantile_matches_oracle_bisection() {
    // independent oracle: bisect the quadrature CDF
    for &(p, df) in &[(0.95, 1u32), (0.5, 2), (0.9, 4), (0.95, 9), (0.99, 5)] {
        let mut lo = 0.0;
        let mut hi = 200.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if common::chi2_cdf_recurrence(mid, df) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let got = chi2_quantile(p, df).unwrap();
        assert!(
            (got - oracle).abs() < 1e-6,
            "p={p} df={df}: {got} vs {oracle}"
        );
    }
    // the classical 95% point on one degree of freedom
    assert!((chi2_quantile(0.95, 1).unwrap() - 3.84145882).abs() < 1e-7);
}

#[test]
fn f_cdf_matches_squared_student_t() {
    // F(1, k) is the square of a Student t with k df
    for &k in &[2u32, 5, 9] {
        for &x in &[0.5f64, 2.0, 5.0] {
            let t = x.sqrt();
            let oracle =
                common::student_t_cdf_quadrature(t, k) - common::student_t_cdf_quadrature(-t, k);
            let got = f_cdf(x, 1, k).unwrap();
            assert!(
                (got - oracle).abs() < 1e-8,
                "k={k} x={x}: {got} vs {oracle}"
            );
        }
    }
}

#[test]
fn noncentral_chi2_cdf_matches_monte_carlo() {
    // 10^7 draws of (Z1 + sqrt(5))^2 + Z2^2 + Z3^2 + Z4^2
    let (x, df, lambda) = (10.0f64, 4u32, 5.0f64);
    let shift = lambda.sqrt();
    let mut rng = substream(20_240_817, 0);
    let reps = 10_000_000u32;
    let mut hits = 0u32;
    for _ in 0..reps {
        let z1 = rng.standard_normal() + shift;
        let mut s = z1 * z1;
        for _ in 0..3 {
            let z = rng.standard_normal();
            s += z * z;
        }
        if s <= x {
            hits += 1;
        }
    }
    let oracle = hits as f64 / reps as f64;
    let got = noncentral_chi2_cdf(x, df, lambda).unwrap();
    assert!((got - oracle).abs() < 2e-3, "{got} vs MC {oracle}");
}

#[test]
fn noncentral_median_lambda_verified_by_monte_carlo_median() {
    let df = 9u32;
    let target = chi2_quantile(0.95, df).unwrap();
    let lambda = noncentral_chi2_median_lambda(df, target).unwrap();
    assert!((noncentral_chi2_cdf(target, df, lambda).unwrap() - 0.5).abs() <= 1e-8);

    // Monte Carlo median of noncentral draws sits at the target
    let shift = lambda.sqrt();
    let mut rng = substream(77_001, 0);
    let reps = 400_000;
    let mut draws: Vec<f64> = (0..reps)
        .map(|_| {
            let z1 = rng.standard_normal() + shift;
            let mut s = z1 * z1;
            for _ in 1..df {
                let z = rng.standard_normal();
                s += z * z;
            }
            s
        })
        .collect();
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mc_median = draws[reps / 2];
    // se of the sample median ~ 1/(2 f(median) sqrt(n)); the density near
    // the median is ~0.06 here, so 3 se is about 0.1
    assert!(
        (mc_median - target).abs() < 0.1,
        "MC median {mc_median} vs target {target}"
    );
}

#[test]
fn pareto_grouped_versus_individual_on_web_links_exponent() {
    // consistency at the published web-links point estimate
    let fam = Pareto1::new(1.0).unwrap();
    let mut rng = substream(829, 0);
    let sample = fam.simulate(100_000, &0.829, &mut rng).unwrap();
    let alpha = fam.fit(&Data::Individual(sample)).unwrap();
    assert!((alpha - 0.829).abs() < 0.01, "alpha = {alpha}");
}

#[test]
fn sampling_bias_profile_constant_matches_direct_joint_evaluation() {
    // full joint log-likelihood at the profile weights, minus the profile,
    // is the same sigma-free constant at every sigma
    let fam = SamplingBias::new(sampling_bias_boundaries(6).unwrap()).unwrap();
    let mut rng = substream(606, 0);
    let sample = Sample::new((0..1500).map(|_| 1.2 * rng.standard_normal()).collect()).unwrap();
    let counts = fam.class_counts(&sample);
    let m2: f64 = sample.values().iter().map(|&x| x * x).sum();
    let n = sample.len() as u64;
    let data = Data::Individual(sample);

    let mut constants = Vec::new();
    for &sigma in &[0.6, 0.9, 1.2, 1.8, 3.0] {
        let probs = fam.class_probs(sigma);
        let weights: Vec<f64> = counts
            .iter()
            .zip(&probs)
            .map(|(&c, &t)| c as f64 / t)
            .collect();
        let joint = fam
            .loglik(
                &data,
                &adeqboot_core::models::SamplingBiasParams { sigma, weights },
            )
            .unwrap();
        let profile = fam.profile_loglik(sigma, &counts, m2, n).unwrap();
        constants.push(joint - profile);
    }
    for w in constants.windows(2) {
        assert!(
            (w[0] - w[1]).abs() < 1e-6,
            "constant drifted: {constants:?}"
        );
    }
}
