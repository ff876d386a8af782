mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgof_core::models::{sample_multiparameter, ModelParams, Seed};
use sgof_core::morse::{classify, critical_counts, lexicographic_matching, verify_acyclic, Classification, Matching};
use sgof_core::{Simplex, SimplicialComplex};

fn s(v: &[u32]) -> Simplex {
    Simplex::new(v.iter().copied()).unwrap()
}

#[test]
fn small_matchings() {
    assert!(lexicographic_matching(&SimplicialComplex::discrete(1)).pairs.is_empty());
    let edge = SimplicialComplex::from_facets(2, [[1, 2]]).unwrap();
    assert_eq!(lexicographic_matching(&edge).pairs, vec![(s(&[2]), s(&[1, 2]))]);
}

#[test]
fn figure_one_classes() {
    let k = SimplicialComplex::from_facets(5, [vec![1, 2], vec![2, 3], vec![1, 4], vec![3, 5], vec![3, 4, 5]]).unwrap();
    assert_eq!(classify(&k, &s(&[3, 4])).unwrap(), Classification::Critical);
    assert_eq!(classify(&k, &s(&[3, 4, 5])).unwrap(), Classification::MatchedDown);
    assert_eq!(classify(&k, &s(&[1])).unwrap(), Classification::Critical);
    assert!(verify_acyclic(&k, &Matching::default()).unwrap());
}

#[test]
fn full_simplices_and_discrete_complexes() {
    for m in 1..=5 {
        let full = SimplicialComplex::from_facets(m, [(1..=m as u32).collect::<Vec<_>>()]).unwrap();
        let mut expected = vec![0; m];
        expected[0] = 1;
        assert_eq!(critical_counts(&full, m).counts, expected);
        let family = (1u64..1 << m).fold(0u64, |f, x| f | 1 << x);
        assert_eq!(common::critical_counts(family, m), expected);
    }
    assert_eq!(critical_counts(&SimplicialComplex::discrete(8), 3).counts, vec![8, 0, 0]);
}

#[test]
fn lexicographic_matchings_are_acyclic_and_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for rep in 0..500 {
        let n = rng.random_range(1..=20);
        let p: Vec<f64> = (0..rng.random_range(1..=3)).map(|_| rng.random_range(0.05..=1.0)).collect();
        let k = sample_multiparameter(&ModelParams::new(n, p).unwrap(), Seed::new(9, rep));
        let m = lexicographic_matching(&k);
        assert!(verify_acyclic(&k, &m).unwrap());
        let mut seen = std::collections::HashSet::new();
        for (a, b) in &m.pairs {
            assert!(seen.insert(a.clone()) && seen.insert(b.clone()));
            assert!(b.size() == a.size() + 1 && a.is_subset_of(b));
        }
    }
}
