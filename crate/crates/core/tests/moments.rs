use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgof_core::models::{sample_multiparameter, ModelParams, Seed};
use sgof_core::moments::{
    critical_mean_bounds, critical_mean_exact, critical_variance_exact, limiting_covariance, mu_of,
};
use sgof_core::morse::critical_counts;
use sgof_core::stats;

fn random_params(rng: &mut ChaCha8Rng, n: usize) -> ModelParams {
    let ones = rng.random_range(0..=2);
    let mut p = vec![1.0; ones];
    p.extend((0..rng.random_range(1..=4)).map(|_| rng.random_range(0.01..=1.0)));
    ModelParams::new(n, p).unwrap()
}

#[test]
fn vanishing_edge_probability() {
    let params = ModelParams::new(12, vec![0.0]).unwrap();
    for a in 1..=11 {
        assert_eq!(mu_of(a, &params, 1).unwrap(), 0.0);
    }
    assert_eq!(critical_mean_exact(&params, 1).unwrap(), 0.0);
    let v = critical_variance_exact(&params, 1).unwrap();
    assert_eq!(v.total, 0.0);
    assert!(v.parts.iter().all(|&x| x == 0.0));
}

#[test]
fn first_minimum_is_never_critical() {
    let params = ModelParams::new(12, vec![0.7, 0.2]).unwrap();
    assert_eq!(mu_of(1, &params, 1).unwrap(), 0.0);
}

#[test]
fn bounds_examples() {
    let params = ModelParams::new(10, vec![0.5, 0.5]).unwrap();
    let (lo, hi) = critical_mean_bounds(&params, 1).unwrap();
    assert!(lo <= 8.41647 && 8.41647 <= hi);
    let full = ModelParams::new(10, vec![1.0, 1.0, 1.0, 0.4]).unwrap();
    assert_eq!(critical_mean_bounds(&full, 2).unwrap(), (0.0, 0.0));
}

#[test]
fn bounds_bracket_simulated_mean() {
    let params = ModelParams::new(50, vec![0.5, 0.5, 0.5]).unwrap();
    let x: Vec<f64> = (0..2000)
        .map(|r| critical_counts(&sample_multiparameter(&params, Seed::new(41, r)), 3).size(3) as f64)
        .collect();
    let (lo, hi) = critical_mean_bounds(&params, 2).unwrap();
    let (m, se) = (stats::mean(&x), stats::mean_stderr(&x));
    assert!(lo <= m + 3.0 * se && m - 3.0 * se <= hi, "{lo} {m} {hi}");
}

#[test]
fn bounds_bracket_exact_mean_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for n in 2..=50 {
        for _ in 0..20 {
            let params = random_params(&mut rng, n);
            for k in 1..n {
                let mean = critical_mean_exact(&params, k).unwrap();
                let (lo, hi) = critical_mean_bounds(&params, k).unwrap();
                let tol = 1e-9 * (1.0 + mean);
                assert!(lo <= mean + tol && mean <= hi + tol, "n={n} p={:?} k={k}: {lo} {mean} {hi}", params.probs());
            }
        }
    }
}

#[test]
fn variance_is_nonnegative_on_a_random_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..200 {
        let n = rng.random_range(2..=60);
        let params = random_params(&mut rng, n);
        let k = rng.random_range(1..n);
        let v = critical_variance_exact(&params, k).unwrap();
        let mean = critical_mean_exact(&params, k).unwrap();
        assert!(v.total >= -1e-7 * (1.0 + mean * mean), "n={n} p={:?} k={k}: {}", params.probs(), v.total);
    }
}

#[test]
fn limiting_correlation_diagonal() {
    let params = ModelParams::new(40, vec![0.5, 0.4, 0.3]).unwrap();
    for i in 1..=3 {
        assert_eq!(limiting_covariance(&params, i, i).unwrap(), 1.0);
    }
    assert!(limiting_covariance(&params, 1, 4).is_err());
}
