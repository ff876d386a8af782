//! Maximum-likelihood fitting of `X(n, p)` and goodness-of-fit tests.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

use crate::complex::{SimplicialComplex, SkeletonCounts};
use crate::error::{Error, Result};
use crate::models::ModelParams;
use crate::moments::{critical_mean_exact, critical_variance_exact, limiting_covariance};
use crate::morse::critical_counts;
use crate::subcomplex::{exact_covariance, expected_count, PatternComplex};

/// Estimates within this distance of 1 are folded into `k'`.
pub const ONE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleResult {
    /// `p_hat[i-1] = s_i / h_i`, or 0 when `h_i = 0`.
    pub p_hat: Vec<f64>,
    pub counts: SkeletonCounts,
}

pub fn mle_fit(k: &SimplicialComplex, d: usize) -> MleResult {
    let counts = k.skeleton_counts(d);
    let p_hat = counts.s.iter().zip(&counts.h).map(|(&s, &h)| if h == 0 { 0.0 } else { s as f64 / h as f64 }).collect();
    MleResult { p_hat, counts }
}

/// Quantile of the chi-square distribution, by bisection on the regularized
/// lower incomplete gamma function.
pub fn chi_square_quantile(df: usize, prob: f64) -> Result<f64> {
    if df == 0 {
        return Err(Error::InvalidParams("chi-square needs df >= 1".into()));
    }
    if !(0.0..1.0).contains(&prob) || prob == 0.0 {
        return Err(Error::InvalidParams(format!("quantile level {prob} outside (0, 1)")));
    }
    let a = df as f64 / 2.0;
    let cdf = |x: f64| gamma_lr(a, x / 2.0);
    let mut hi = df as f64 + 10.0;
    while cdf(hi) < prob {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    /// Chi-square test on the vector of critical-simplex counts.
    Critical,
    /// z-test on the number of 2-simplices.
    Triangle,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::Critical => "critical",
            Statistic::Triangle => "triangle",
        }
    }
}

impl std::str::FromStr for Statistic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "critical" => Ok(Statistic::Critical),
            "triangle" => Ok(Statistic::Triangle),
            _ => Err(Error::Config(format!("unknown statistic `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofOptions {
    pub alpha: f64,
    /// Lower bound on `k'`; estimates at or below it are forced to 1.
    pub k_prime: Option<usize>,
    /// Use the identity instead of the limiting correlation matrix.
    pub diagonal_sigma: bool,
}

impl Default for GofOptions {
    fn default() -> Self {
        Self { alpha: 0.05, k_prime: None, diagonal_sigma: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic_kind: Statistic,
    pub p_hat: Vec<f64>,
    pub k_prime: usize,
    /// Size (number of vertices) of the simplices behind each component.
    pub sizes: Vec<usize>,
    pub t: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub w: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    pub statistic: f64,
    pub df: usize,
    pub threshold: f64,
    pub reject: bool,
    /// No usable component remained.
    pub inconclusive: bool,
    pub warnings: Vec<String>,
}

impl GofResult {
    fn inconclusive(kind: Statistic, p_hat: Vec<f64>, k_prime: usize, mut warnings: Vec<String>) -> Self {
        warnings.push("no component with positive variance; test is inconclusive".into());
        Self {
            statistic_kind: kind,
            p_hat,
            k_prime,
            sizes: vec![],
            t: vec![],
            mean: vec![],
            variance: vec![],
            w: vec![],
            sigma: vec![],
            statistic: f64::NAN,
            df: 0,
            threshold: f64::NAN,
            reject: false,
            inconclusive: true,
            warnings,
        }
    }

    /// Passed means neither rejected nor inconclusive.
    pub fn passes(&self) -> bool {
        !self.reject && !self.inconclusive
    }
}

/// Fitted parameters with leading near-one estimates folded into `k'`.
fn fitted_params(
    k: &SimplicialComplex,
    d: usize,
    opts: &GofOptions,
    warnings: &mut Vec<String>,
) -> Result<(Vec<f64>, ModelParams)> {
    let mut p_hat = mle_fit(k, d).p_hat;
    let folded = p_hat.iter().take_while(|&&x| x >= 1.0 - ONE_TOLERANCE).count();
    let kp = folded.max(opts.k_prime.unwrap_or(0)).min(d);
    for (i, x) in p_hat.iter_mut().enumerate().take(kp) {
        if *x < 1.0 {
            warnings.push(format!("p_hat_{} = {x} forced to 1 by k' = {kp}", i + 1));
        }
        *x = 1.0;
    }
    // Zeros may only trail; an interior zero estimate truncates the model.
    let mut model = p_hat.clone();
    if let Some(z) = model.iter().position(|&x| x == 0.0) {
        if model[z..].iter().any(|&x| x > 0.0) {
            warnings.push(format!("p_hat_{} = 0 truncates the fitted model", z + 1));
        }
        model.truncate(z);
    }
    Ok((p_hat, ModelParams::new(k.n(), model)?))
}

struct Component {
    size: usize,
    t: f64,
    mean: f64,
    variance: f64,
}

fn finish(
    kind: Statistic,
    p_hat: Vec<f64>,
    params: &ModelParams,
    mut comps: Vec<Component>,
    mut warnings: Vec<String>,
    sigma_of: impl Fn(&[Component]) -> Result<DMatrix<f64>>,
    alpha: f64,
) -> Result<GofResult> {
    comps.retain(|c| {
        let ok = c.variance > 0.0 && c.variance.is_finite();
        if !ok {
            warnings.push(format!("component of size {} dropped: variance {}", c.size, c.variance));
        }
        ok
    });
    loop {
        if comps.is_empty() {
            return Ok(GofResult::inconclusive(kind, p_hat, params.k_prime(), warnings));
        }
        let sigma = sigma_of(&comps)?;
        let Some(chol) = sigma.clone().cholesky() else {
            let c = comps.pop().unwrap();
            warnings.push(format!("correlation matrix not positive definite; dropped component of size {}", c.size));
            continue;
        };
        let w = DVector::from_iterator(comps.len(), comps.iter().map(|c| (c.t - c.mean) / c.variance.sqrt()));
        let statistic = w.dot(&chol.solve(&w));
        let df = comps.len();
        let threshold = chi_square_quantile(df, 1.0 - alpha)?;
        return Ok(GofResult {
            statistic_kind: kind,
            p_hat,
            k_prime: params.k_prime(),
            sizes: comps.iter().map(|c| c.size).collect(),
            t: comps.iter().map(|c| c.t).collect(),
            mean: comps.iter().map(|c| c.mean).collect(),
            variance: comps.iter().map(|c| c.variance).collect(),
            w: w.iter().copied().collect(),
            sigma: sigma.row_iter().map(|r| r.iter().copied().collect()).collect(),
            statistic,
            df,
            threshold,
            reject: statistic > threshold,
            inconclusive: false,
            warnings,
        });
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("alpha = {alpha} outside (0, 1)")))
    }
}

/// Chi-square test on critical-simplex counts of sizes `k'+2..=d+1`.
pub fn gof_critical(k: &SimplicialComplex, d: usize, opts: &GofOptions) -> Result<GofResult> {
    check_alpha(opts.alpha)?;
    let mut warnings = Vec::new();
    let (p_hat, params) = fitted_params(k, d, opts, &mut warnings)?;
    let kp = params.k_prime();
    let top = d.min(k.n().saturating_sub(1));
    let crit = critical_counts(k, top + 1);
    let mut comps = Vec::new();
    for kk in kp + 1..=top {
        comps.push(Component {
            size: kk + 1,
            t: crit.size(kk + 1) as f64,
            mean: critical_mean_exact(&params, kk)?,
            variance: critical_variance_exact(&params, kk)?.total,
        });
    }
    let diagonal = opts.diagonal_sigma;
    let sigma_of = |cs: &[Component]| -> Result<DMatrix<f64>> {
        let idx: Vec<usize> = cs.iter().map(|c| c.size - 1 - kp).collect();
        let mut m = DMatrix::identity(cs.len(), cs.len());
        if !diagonal {
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    if a != b {
                        m[(a, b)] = limiting_covariance(&params, i, j)?;
                    }
                }
            }
        }
        Ok(m)
    };
    finish(Statistic::Critical, p_hat, &params, comps, warnings, sigma_of, opts.alpha)
}

/// z-test (as a one-degree chi-square) of the 2-simplex count against its
/// exact mean and variance under the fitted model.
pub fn gof_triangle(k: &SimplicialComplex, d: usize, opts: &GofOptions) -> Result<GofResult> {
    check_alpha(opts.alpha)?;
    if d < 2 {
        return Err(Error::InvalidParams("the triangle test needs d >= 2".into()));
    }
    let mut warnings = Vec::new();
    let (p_hat, params) = fitted_params(k, d, opts, &mut warnings)?;
    let tri = PatternComplex::simplex(3)?;
    let comps = if k.n() >= 3 {
        vec![Component {
            size: 3,
            t: k.count(3) as f64,
            mean: expected_count(&tri, &params),
            variance: exact_covariance(&tri, &tri, &params)?,
        }]
    } else {
        vec![]
    };
    let sigma_of = |cs: &[Component]| Ok(DMatrix::identity(cs.len(), cs.len()));
    finish(Statistic::Triangle, p_hat, &params, comps, warnings, sigma_of, opts.alpha)
}

pub fn gof(kind: Statistic, k: &SimplicialComplex, d: usize, opts: &GofOptions) -> Result<GofResult> {
    match kind {
        Statistic::Critical => gof_critical(k, d, opts),
        Statistic::Triangle => gof_triangle(k, d, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn chi_square_closed_forms() {
        // df = 2 is exponential with mean 2.
        for p in [0.5, 0.9, 0.95, 0.99] {
            let q = chi_square_quantile(2, p).unwrap();
            assert!((q + 2.0 * (1.0 - p).ln()).abs() < 1e-8, "{p}");
        }
        assert!((chi_square_quantile(2, 0.95).unwrap() - 5.991464547).abs() < 1e-8);
        // df = 1 is a squared standard normal.
        let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.975);
        assert!((chi_square_quantile(1, 0.95).unwrap() - z * z).abs() < 1e-8);
        assert!(chi_square_quantile(0, 0.95).is_err());
        assert!(chi_square_quantile(3, 1.0).is_err());
    }

    #[test]
    fn mle_counts() {
        let k =
            SimplicialComplex::from_facets(5, [vec![1, 2], vec![2, 3], vec![1, 4], vec![3, 5], vec![3, 4, 5]]).unwrap();
        let fit = mle_fit(&k, 3);
        assert_eq!(fit.p_hat, vec![0.6, 1.0, 0.0]);
    }

    #[test]
    fn complete_graph_folds_into_k_prime() {
        let k =
            SimplicialComplex::from_facets(6, (1..=6u32).flat_map(|a| (a + 1..=6).map(move |b| vec![a, b]))).unwrap();
        let r = gof_critical(&k, 2, &GofOptions::default()).unwrap();
        assert_eq!(r.k_prime, 1);
        // p_hat_2 = 0 leaves nothing to test.
        assert!(r.inconclusive);
    }

    #[test]
    fn empty_complex_is_inconclusive() {
        let k = SimplicialComplex::discrete(10);
        let r = gof_critical(&k, 2, &GofOptions::default()).unwrap();
        assert!(r.inconclusive && !r.reject);
        assert!(gof_triangle(&k, 2, &GofOptions::default()).unwrap().inconclusive);
    }
}
