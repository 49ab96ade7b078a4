//! Independent numerical oracles shared by the integration suites. These
//! deliberately avoid the library's incomplete-gamma/beta machinery so the
//! checks stay meaningful: erf comes from its Maclaurin series, gamma
//! values from exact half-integer closed forms, and CDFs from Simpson
//! quadrature of the densities.

#![allow(dead_code)]

/// erf by its Maclaurin series, near machine precision for |z| <= ~5.
pub fn erf_series(z: f64) -> f64 {
    let mut term = z;
    let mut sum = z;
    for n in 1..300 {
        let nf = n as f64;
        term *= -z * z / nf;
        let contrib = term / (2.0 * nf + 1.0);
        sum += contrib;
        if contrib.abs() < 1e-18 * sum.abs().max(1e-18) {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

/// Standard normal CDF through the series erf.
pub fn normal_cdf_series(x: f64) -> f64 {
    0.5 * (1.0 + erf_series(x / std::f64::consts::SQRT_2))
}

/// Composite Simpson quadrature with 2 * n_panels intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n_panels: usize) -> f64 {
    let n = n_panels * 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// ln Gamma(twice/2) for positive integer `twice`, from the exact
/// factorial and double-factorial closed forms.
pub fn ln_gamma_half(twice: u32) -> f64 {
    assert!(twice > 0);
    if twice % 2 == 0 {
        // Gamma(m) = (m-1)!
        let m = twice / 2;
        (1..m).map(|j| (j as f64).ln()).sum()
    } else {
        // Gamma(m + 1/2) = sqrt(pi) * prod_{j=1..m} (2j-1)/2
        let m = twice / 2;
        0.5 * std::f64::consts::PI.ln()
            + (1..=m)
                .map(|j| ((2 * j - 1) as f64 / 2.0).ln())
                .sum::<f64>()
    }
}

/// Chi-square CDF from the exact downward recurrence
/// F_{k+2}(x) = F_k(x) - (x/2)^{k/2} e^{-x/2} / Gamma(k/2 + 1),
/// seeded by the erf identity (df = 1) and the exponential (df = 2).
pub fn chi2_cdf_recurrence(x: f64, df: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let seed = if df % 2 == 1 { 1 } else { 2 };
    let mut cdf = if seed == 1 {
        erf_series((x / 2.0).sqrt())
    } else {
        1.0 - (-x / 2.0_f64).exp()
    };
    let mut k = seed;
    while k < df {
        let half_k = k as f64 / 2.0;
        cdf -= (half_k * (x / 2.0).ln() - x / 2.0 - ln_gamma_half(k + 2)).exp();
        k += 2;
    }
    cdf.clamp(0.0, 1.0)
}

/// Student-t CDF by quadrature of the density.
pub fn student_t_cdf_quadrature(t: f64, df: u32) -> f64 {
    let k = df as f64;
    let ln_norm = ln_gamma_half(df + 1) - ln_gamma_half(df) - 0.5 * (k * std::f64::consts::PI).ln();
    let density = |u: f64| (ln_norm - 0.5 * (k + 1.0) * (1.0 + u * u / k).ln()).exp();
    0.5 + t.signum() * simpson(&density, 0.0, t.abs(), 4000)
}
