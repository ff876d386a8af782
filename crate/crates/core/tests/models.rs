mod common;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgof_core::inference::chi_square_quantile;
use sgof_core::models::{
    sample_multiparameter, sample_on_points, simplex_volume, triangle_area, GeometricKernel, ModelParams, Phi,
    PointCloud, Seed,
};
use sgof_core::{stats, Simplex};

#[test]
fn degenerate_parameters() {
    let complete = sample_multiparameter(&ModelParams::new(9, vec![1.0, 0.0]).unwrap(), Seed::new(0, 0));
    assert_eq!((complete.count(2), complete.dimension()), (36, Some(1)));
    let skeleton = sample_multiparameter(&ModelParams::new(5, vec![1.0, 1.0, 0.0]).unwrap(), Seed::new(0, 0));
    assert_eq!((skeleton.count(3), skeleton.count(4)), (10, 0));
}

#[test]
fn mean_simplex_counts() {
    let params = ModelParams::new(10, vec![0.5, 0.5]).unwrap();
    let (edges, triangles): (Vec<f64>, Vec<f64>) = (0..10_000)
        .map(|r| {
            let k = sample_multiparameter(&params, Seed::new(17, r));
            (k.count(2) as f64, k.count(3) as f64)
        })
        .unzip();
    for (x, expected) in [(edges, 22.5), (triangles, 7.5)] {
        let z = (stats::mean(&x) - expected) / stats::mean_stderr(&x);
        assert!(z.abs() <= 3.0, "z = {z}");
    }
}

/// Family bitmask of a sampled complex on at most six vertices.
fn family_of(k: &sgof_core::SimplicialComplex) -> u64 {
    k.iter().fold(0, |f, s| f | 1 << s.vertices().iter().fold(0u32, |m, &v| m | 1 << (v - 1)))
}

#[test]
fn law_matches_product_form() {
    const DRAWS: u64 = 100_000;
    for n in [3, 4] {
        let params = ModelParams::new(n, vec![0.5, 0.5]).unwrap();
        let exact = common::enumerate(n, &[0.5, 0.5]);
        let mut observed = vec![0u64; exact.len()];
        for r in 0..DRAWS {
            let f = family_of(&sample_multiparameter(&params, Seed::new(23, r)));
            let i = exact.iter().position(|(g, _)| *g == f).expect("sample is an attainable complex");
            observed[i] += 1;
        }
        let chi2: f64 = exact
            .iter()
            .zip(&observed)
            .map(|(&(_, p), &o)| {
                let e = p * DRAWS as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        let threshold = chi_square_quantile(exact.len() - 1, 0.999).unwrap();
        assert!(chi2 <= threshold, "n={n}: chi-square {chi2} over {threshold} with {} cells", exact.len());
    }
}

fn random_points(rng: &mut ChaCha8Rng, count: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[test]
fn triangle_area_examples_and_heron() {
    assert!((triangle_area(&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
    assert!(triangle_area(&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]).unwrap().abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let p = random_points(&mut rng, 3, 4);
        let (a, b, c) = (dist2(&p[0], &p[1]).sqrt(), dist2(&p[1], &p[2]).sqrt(), dist2(&p[0], &p[2]).sqrt());
        let s = (a + b + c) / 2.0;
        let heron = (s * (s - a) * (s - b) * (s - c)).max(0.0).sqrt();
        assert!((triangle_area(&p[0], &p[1], &p[2]).unwrap() - heron).abs() < 1e-9);
    }
}

fn cayley_menger_volume(p: &[Vec<f64>]) -> f64 {
    let k = p.len() - 1;
    let m = DMatrix::from_fn(k + 2, k + 2, |i, j| match (i, j) {
        (0, 0) => 0.0,
        (0, _) | (_, 0) => 1.0,
        _ => dist2(&p[i - 1], &p[j - 1]),
    });
    let factorial: f64 = (1..=k).map(|x| x as f64).product();
    let sign = if k.is_multiple_of(2) { -1.0 } else { 1.0 };
    (sign * m.determinant() / (2f64.powi(k as i32) * factorial * factorial)).max(0.0).sqrt()
}

#[test]
fn simplex_volume_examples_and_cayley_menger() {
    let o = [0.0, 0.0, 0.0];
    let (e1, e2, e3) = ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
    assert!((simplex_volume(&[&o, &e1, &e2, &e3]).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    let flat = [1.0, 1.0, 0.0];
    assert!(simplex_volume(&[&o, &e1, &e2, &flat]).unwrap().abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let p = random_points(&mut rng, 4, 7);
        let refs: Vec<&[f64]> = p.iter().map(Vec::as_slice).collect();
        assert!((simplex_volume(&refs).unwrap() - cayley_menger_volume(&p)).abs() < 1e-9);
    }
}

#[test]
fn kernel_is_symmetric_in_the_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let points = PointCloud { ambient_dim: 3, points: random_points(&mut rng, 4, 3) };
    let phi = Phi::Threshold { eps1: 0.05, eps2: 0.3 };
    let base = phi.eval(|| points.volume(&Simplex::new([1, 2, 3, 4]).unwrap()));
    for perm in [[4u32, 3, 2, 1], [2, 1, 4, 3], [3, 1, 4, 2]] {
        let relabelled = PointCloud {
            ambient_dim: 3,
            points: perm.iter().map(|&v| points.points[v as usize - 1].clone()).collect(),
        };
        assert_eq!(phi.eval(|| relabelled.volume(&Simplex::new([1, 2, 3, 4]).unwrap())), base);
    }
}

#[test]
fn threshold_kernel_on_fixed_points() {
    let points = PointCloud { ambient_dim: 1, points: vec![vec![0.0], vec![0.1], vec![0.5], vec![2.0]] };
    let kernel = GeometricKernel::new(vec![Phi::Threshold { eps1: 0.2, eps2: 0.2 }]).unwrap();
    let k = sample_on_points(&points, &kernel, Seed::new(0, 0)).unwrap();
    let edges: Vec<Vec<u32>> = k.simplices(2).map(|e| e.vertices().to_vec()).collect();
    assert_eq!(edges, vec![vec![1, 2]]);
}
