//! Closed-form moments of critical-simplex counts under the lexicographic
//! matching, and MLE standardization constants.
//!
//! `T_{k+1}` counts critical simplices with `k + 1` vertices. With
//! `ρ(a) = Π_{i=k'+1}^{a} p_i^{C(a,i)}` and `ρ⁺(a) = Π_{i=k'+1}^{a} p_i^{C(a,i+1)}`,
//! a `(k+1)`-set with minimum `l` is critical with probability
//! `μ(l) = ρ⁺(k+1)[(1-ρ(k+1))^{l-1} - (1-ρ(k))^{l-1}]`.
//!
//! Everything except the limiting correlation is generic over the scalar so
//! the same code runs in `f64` and in exact rational arithmetic.

use num_traits::{FromPrimitive, Num};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelParams;

pub trait Scalar: Num + Clone + FromPrimitive + PartialOrd + Send + Sync + std::fmt::Debug {}
impl<T: Num + Clone + FromPrimitive + PartialOrd + Send + Sync + std::fmt::Debug> Scalar for T {}

pub(crate) fn binom_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc.checked_mul(n as u128 - i)? / (i + 1);
    }
    Some(acc)
}

/// `C(n, k)` in `T`, exact while it fits in `u128`.
pub fn binom<T: Scalar>(n: usize, k: usize) -> T {
    match binom_u128(n as u64, k as u64) {
        Some(v) => T::from_u128(v).expect("binomial representable"),
        None => T::from_f64(statrs::function::factorial::binomial(n as u64, k as u64)).expect("finite binomial"),
    }
}

/// `C(n, k)` as `f64`.
pub fn binomial(n: usize, k: usize) -> f64 {
    binom(n, k)
}

fn powu<T: Scalar>(x: &T, e: usize) -> T {
    num_traits::pow(x.clone(), e)
}

fn scalar<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite probability")
}

/// `ρ` and `ρ⁺` tabulated for `a = 0..=amax` relative to `k'`.
struct RhoTable<T> {
    rho: Vec<T>,
    rho_plus: Vec<T>,
}

impl<T: Scalar> RhoTable<T> {
    fn new(params: &ModelParams, amax: usize) -> Self {
        let kp = params.k_prime();
        let p: Vec<T> = (0..=amax).map(|i| scalar(params.p(i))).collect();
        let prod = |a: usize, exp: &dyn Fn(usize) -> usize| -> T {
            (kp + 1..=a).fold(T::one(), |acc, i| acc * powu(&p[i], exp(i)))
        };
        let rho = (0..=amax).map(|a| prod(a, &|i| binom_u128(a as u64, i as u64).unwrap() as usize)).collect();
        let rho_plus = (0..=amax).map(|a| prod(a, &|i| binom_u128(a as u64, i as u64 + 1).unwrap() as usize)).collect();
        Self { rho, rho_plus }
    }
}

/// Precomputed quantities for one `k`.
struct Critical<T> {
    n: usize,
    k: usize,
    kp: usize,
    t: RhoTable<T>,
}

impl<T: Scalar> Critical<T> {
    fn new(params: &ModelParams, k: usize) -> Result<Self> {
        let n = params.n();
        if k == 0 || k + 1 > n {
            return Err(Error::OutOfRange(format!("k = {k} must satisfy 1 <= k <= n - 1 = {}", n as i64 - 1)));
        }
        Ok(Self { n, k, kp: params.k_prime(), t: RhoTable::new(params, k + 1) })
    }

    fn rho(&self, a: usize) -> &T {
        &self.t.rho[a]
    }

    fn rho_plus(&self, a: usize) -> &T {
        &self.t.rho_plus[a]
    }

    fn mu(&self, l: usize) -> T {
        let one = T::one();
        let k = self.k;
        self.rho_plus(k + 1).clone()
            * (powu(&(one.clone() - self.rho(k + 1).clone()), l - 1) - powu(&(one - self.rho(k).clone()), l - 1))
    }

    fn mean(&self) -> T {
        (1..=self.n - self.k).fold(T::zero(), |acc, l| acc + binom::<T>(self.n - l, self.k) * self.mu(l))
    }

    fn bounds(&self) -> (T, T) {
        let (n, k) = (self.n, self.k);
        let one = T::one();
        let (rk, rk1, rp) = (self.rho(k).clone(), self.rho(k + 1).clone(), self.rho_plus(k + 1).clone());
        let lower = if n >= k + 2 { binom::<T>(n - 2, k) * rp.clone() * (rk.clone() - rk1.clone()) } else { T::zero() };
        // Each term (1 - ρ(k+1))^{l-1} - (1 - ρ(k))^{l-1} is nonnegative, so the
        // series over all l >= 1 bounds the sum. It diverges when ρ(k+1) = 0,
        // where the finite sum over the n - k admissible minima is used.
        let terms = n - k;
        let finite = |x: &T| {
            if x.is_zero() {
                T::from_usize(terms).unwrap()
            } else {
                (one.clone() - powu(&(one.clone() - x.clone()), terms)) / x.clone()
            }
        };
        let spread = if rk1.is_zero() { finite(&rk1) - finite(&rk) } else { one.clone() / rk1 - one.clone() / rk };
        let upper = binom::<T>(n - 1, k) * rp * spread;
        (lower, upper)
    }

    /// `[V1, V2, V3, V4]`.
    fn variance_parts(&self) -> Result<[T; 4]> {
        let (n, k, kp) = (self.n, self.k, self.kp);
        let zero = T::zero();
        if self.rho_plus(k + 1).is_zero() {
            return Ok([zero.clone(), zero.clone(), zero.clone(), zero]);
        }
        for j in kp + 1..=k {
            if self.rho(j).is_zero() || self.rho(j - 1).is_zero() || self.rho_plus(j).is_zero() {
                return Err(Error::Numerical(format!("ρ vanishes at index {j} <= k = {k}")));
            }
        }
        let one = T::one();
        let two = one.clone() + one.clone();
        let rk = self.rho(k).clone();
        let rk1 = self.rho(k + 1).clone();
        let rp = self.rho_plus(k + 1).clone();
        let rp2 = rp.clone() * rp;
        let top = n - k;

        // Bases indexed by x = j or j - 1, for x in kp..=k.
        let base = |x: usize| {
            let rx = self.rho(x).clone();
            let a = one.clone() - two.clone() * rk1.clone() + rk1.clone() * rk1.clone() / rx.clone();
            let b = one.clone() - two.clone() * rk.clone() + rk.clone() * rk.clone() / rx.clone();
            let c = one.clone() - rk.clone() - rk1.clone() + rk.clone() * rk1.clone() / rx;
            (a, b, c)
        };
        let bases: Vec<(T, T, T)> =
            (0..=k).map(|x| if x >= kp { base(x) } else { (zero.clone(), zero.clone(), zero.clone()) }).collect();
        let weight: Vec<T> =
            (0..=k).map(|j| if j > kp { rp2.clone() / self.rho_plus(j).clone() } else { zero.clone() }).collect();

        // τ factors: (1 - ρ(a))^{e} and (1 - ρ(a)/ρ(b))^{q}, a ∈ {k, k+1}.
        let pow_table = |x: T| {
            let mut v = Vec::with_capacity(top + 1);
            let mut acc = one.clone();
            for _ in 0..=top {
                v.push(acc.clone());
                acc = acc * x.clone();
            }
            v
        };
        let free_k = pow_table(one.clone() - rk.clone());
        let free_k1 = pow_table(one.clone() - rk1.clone());
        let ratio = |a: &T, b: usize, q: usize| powu(&(one.clone() - a.clone() / self.rho(b).clone()), q);
        // shared[a_sel][b][q]
        let shared: Vec<Vec<Vec<T>>> = [&rk, &rk1]
            .iter()
            .map(|a| {
                (0..=k)
                    .map(|b| (0..=k + 1).map(|q| if b >= kp { ratio(a, b, q) } else { zero.clone() }).collect())
                    .collect()
            })
            .collect();
        let mus: Vec<T> = (0..=top).map(|l| if l == 0 { zero.clone() } else { self.mu(l) }).collect();

        let per_l: Vec<[T; 4]> = (1..=top)
            .into_par_iter()
            .map(|l| {
                let pw: Vec<(T, T, T)> =
                    bases.iter().map(|(a, b, c)| (powu(a, l - 1), powu(b, l - 1), powu(c, l - 1))).collect();
                let mu_l = mus[l].clone();
                let v4 = binom::<T>(n - l, k) * (mu_l.clone() - mu_l.clone() * mu_l.clone());
                let mut v3 = T::zero();
                for j in kp + 1..=k {
                    let c = binom::<T>(n - l, 2 * k + 1 - j) * binom::<T>(2 * k + 1 - j, k) * binom::<T>(k, j - 1);
                    if c.is_zero() {
                        continue;
                    }
                    let inner = pw[j].0.clone() + pw[j - 1].1.clone() - two.clone() * pw[j - 1].2.clone();
                    v3 = v3 + c * (weight[j].clone() * inner - mu_l.clone() * mu_l.clone());
                }
                let mut v1 = T::zero();
                let mut v2 = T::zero();
                for m in l + 1..=top {
                    let mu_lm = mu_l.clone() * mus[m].clone();
                    for j in kp + 1..=k {
                        // Pairs where min(t) lies in s, then pairs where it does not.
                        let plus_inner = |q: usize| {
                            free_k[m - l - q].clone()
                                * shared[0][j - 1][q].clone()
                                * (pw[j - 1].1.clone() - pw[j - 1].2.clone())
                                + free_k1[m - l - q].clone()
                                    * shared[1][j][q].clone()
                                    * (pw[j].0.clone() - pw[j].2.clone())
                        };
                        let minus_inner = |q: usize| {
                            free_k[m - l - q].clone() * shared[0][j][q].clone() * (pw[j].1.clone() - pw[j].2.clone())
                                + free_k1[m - l - q].clone()
                                    * shared[1][j][q].clone()
                                    * (pw[j].0.clone() - pw[j].2.clone())
                        };
                        for q in 1..=(k + 1).min(m - l) {
                            let Some(rest) = (2 * k + 1).checked_sub(j + q) else { continue };
                            let common = binom::<T>(n - m, rest) * binom::<T>(rest, k) * binom::<T>(m - l - 1, q - 1);
                            if common.is_zero() {
                                continue;
                            }
                            let cp = common.clone() * binom::<T>(k, j - 1);
                            if !cp.is_zero() {
                                v1 = v1 + cp * (weight[j].clone() * plus_inner(q) - mu_lm.clone());
                            }
                            let cm = common * binom::<T>(k, j);
                            if !cm.is_zero() {
                                v2 = v2 + cm * (weight[j].clone() * minus_inner(q) - mu_lm.clone());
                            }
                        }
                    }
                }
                [two.clone() * v1, two.clone() * v2, v3, v4]
            })
            .collect();
        Ok(per_l.into_iter().fold([T::zero(), T::zero(), T::zero(), T::zero()], |acc, x| {
            let [a, b, c, d] = acc;
            let [w, x2, y, z] = x;
            [a + w, b + x2, c + y, d + z]
        }))
    }
}

/// `μ(a)` for simplices with `k + 1` vertices.
pub fn mu_of(a: usize, params: &ModelParams, k: usize) -> Result<f64> {
    if a == 0 {
        return Err(Error::OutOfRange("μ is indexed from a = 1".into()));
    }
    Ok(Critical::<f64>::new(params, k)?.mu(a))
}

pub fn critical_mean_exact(params: &ModelParams, k: usize) -> Result<f64> {
    critical_mean_generic(params, k)
}

pub fn critical_mean_generic<T: Scalar>(params: &ModelParams, k: usize) -> Result<T> {
    Ok(Critical::<T>::new(params, k)?.mean())
}

/// `(lower, upper)` closed-form bounds on `E[T_{k+1}]`.
pub fn critical_mean_bounds(params: &ModelParams, k: usize) -> Result<(f64, f64)> {
    Ok(Critical::<f64>::new(params, k)?.bounds())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceParts {
    pub total: f64,
    pub parts: [f64; 4],
}

pub fn critical_variance_exact(params: &ModelParams, k: usize) -> Result<VarianceParts> {
    let parts = critical_variance_generic::<f64>(params, k)?;
    Ok(VarianceParts { total: parts.iter().sum(), parts })
}

pub fn critical_variance_generic<T: Scalar>(params: &ModelParams, k: usize) -> Result<[T; 4]> {
    Critical::<T>::new(params, k)?.variance_parts()
}

/// Limiting correlation of `T_{k'+i+1}` and `T_{k'+j+1}`; 1 on the diagonal.
pub fn limiting_covariance(params: &ModelParams, i: usize, j: usize) -> Result<f64> {
    let (kp, d) = (params.k_prime(), params.d());
    for x in [i, j] {
        if x == 0 || kp + x > d {
            return Err(Error::OutOfRange(format!("index {x} outside 1..={}", d.saturating_sub(kp))));
        }
    }
    if i == j {
        return Ok(1.0);
    }
    let (k, r) = (kp + i.min(j), kp + i.max(j));
    let t = RhoTable::<f64>::new(params, r + 1);
    let (a, b, base) = (t.rho[k + 1], t.rho[r + 1], t.rho[kp + 1]);
    let num = a * b * ((2.0 - a) * (2.0 - b) * (2.0 - a / base) * (2.0 - b / base)).sqrt();
    let den = (a + b - a * b / base) * (a + b - a * b);
    if den == 0.0 {
        return Err(Error::Numerical("limiting correlation has a vanishing denominator".into()));
    }
    Ok(num / den)
}

/// Upper bound `4ρρ'/(ρ+ρ')²` on the off-diagonal limiting correlation.
pub fn limiting_covariance_bound(params: &ModelParams, i: usize, j: usize) -> Result<f64> {
    let (kp, d) = (params.k_prime(), params.d());
    if i == 0 || j == 0 || kp + i.max(j) > d {
        return Err(Error::OutOfRange(format!("indices ({i}, {j}) outside 1..={}", d.saturating_sub(kp))));
    }
    let t = RhoTable::<f64>::new(params, kp + i.max(j) + 1);
    let (a, b) = (t.rho[kp + i + 1], t.rho[kp + j + 1]);
    Ok(4.0 * a * b / ((a + b) * (a + b)))
}

/// Correlation matrix over components `k = k'+1..=k'+m`.
pub fn limiting_correlation_matrix(params: &ModelParams, m: usize) -> Result<Vec<Vec<f64>>> {
    (1..=m).map(|i| (1..=m).map(|j| limiting_covariance(params, i, j)).collect()).collect()
}

/// Probability that all `i`-faces of a fixed `(i+1)`-set are present:
/// `P_i = Π_{j=1}^{i-1} p_j^{C(i+1,j+1)}`.
pub fn hollow_probability(params: &ModelParams, i: usize) -> f64 {
    (1..i).map(|j| params.p(j).powf(binomial(i + 1, j + 1))).product()
}

/// `(√(C(n,i+1) P_i), p_i (1 - p_i))`: the scaling under which `p̂_i - p_i`
/// is asymptotically normal, and the limiting variance.
pub fn mle_scaling(params: &ModelParams, i: usize) -> Result<(f64, f64)> {
    if i == 0 || i > params.d() {
        return Err(Error::OutOfRange(format!("MLE index {i} outside 1..={}", params.d())));
    }
    let scale = (binomial(params.n(), i + 1) * hollow_probability(params, i)).sqrt();
    let p = params.p(i);
    Ok((scale, p * (1.0 - p)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub k: usize,
    pub mean: f64,
    pub mean_lower: f64,
    pub mean_upper: f64,
    pub variance: f64,
    #[serde(rename = "V")]
    pub v: [f64; 4],
    pub sigma_inf: Vec<Vec<f64>>,
}

/// All moments for `T_{k+1}` plus the correlation matrix of the components
/// `k'+1..=min(d, n-1)`.
pub fn moment_report(params: &ModelParams, k: usize) -> Result<MomentReport> {
    let crit = Critical::<f64>::new(params, k)?;
    let (mean_lower, mean_upper) = crit.bounds();
    let v = crit.variance_parts()?;
    let m = params.d().min(params.n() - 1).saturating_sub(params.k_prime());
    Ok(MomentReport {
        k,
        mean: crit.mean(),
        mean_lower,
        mean_upper,
        variance: v.iter().sum(),
        v,
        sigma_inf: limiting_correlation_matrix(params, m)?,
    })
}
