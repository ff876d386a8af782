//! Summary statistics for Monte-Carlo checks.

use statrs::distribution::{ContinuousCDF, Normal};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Standard error of the sample mean.
pub fn mean_stderr(x: &[f64]) -> f64 {
    (variance(x) / x.len() as f64).sqrt()
}

/// Asymptotic standard error of the sample variance, from the fourth
/// central moment: `Var(s²) ≈ (m4 - s⁴ (N-3)/(N-1)) / N`.
pub fn variance_stderr(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = mean(x);
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    let s2 = variance(x);
    ((m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
}

/// Pearson correlation.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Kolmogorov-Smirnov distance between the empirical law of `x` and
/// `N(0, sd²)`.
pub fn ks_normal(x: &[f64], sd: f64) -> f64 {
    let dist = Normal::new(0.0, sd).expect("positive standard deviation");
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &z)| {
            let f = dist.cdf(z);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}
