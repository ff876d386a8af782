//! Independent oracles: complexes as bitmask families, enumerated exactly.
//!
//! A complex on `n <= 6` vertices is a `u64` whose bit `x` is set when the
//! vertex set with mask `x` (bit `v-1` for vertex `v`) is a simplex.

#![allow(dead_code)]

use itertools::Itertools;
use sgof_core::SimplicialComplex;

pub type Family = u64;

pub fn vertices_of(mask: u32) -> Vec<u32> {
    (0..32).filter(|b| mask & (1 << b) != 0).map(|b| b + 1).collect()
}

pub fn discrete_family(n: usize) -> Family {
    (0..n).fold(0, |f, v| f | 1 << (1u32 << v))
}

fn contains(f: Family, mask: u32) -> bool {
    f & (1 << mask) != 0
}

/// Masks with `size` bits whose facets all lie in `f`.
pub fn hollow(f: Family, n: usize, size: usize) -> Vec<u32> {
    (1u32..1 << n)
        .filter(|x| x.count_ones() as usize == size)
        .filter(|&x| (0..n).filter(|b| x & (1 << b) != 0).all(|b| contains(f, x & !(1 << b))))
        .collect()
}

/// Every complex on `[n]` containing all vertices, with its probability
/// under `X(n, p)`. Zero-probability complexes are skipped; with an empty
/// `p` every complex is listed with weight 1.
pub fn enumerate(n: usize, p: &[f64]) -> Vec<(Family, f64)> {
    assert!(n <= 6);
    let mut out = Vec::new();
    let max_size = if p.is_empty() { n } else { p.len() + 1 };
    grow(discrete_family(n), n, 2, max_size, p, 1.0, &mut out);
    out
}

fn grow(f: Family, n: usize, size: usize, max_size: usize, p: &[f64], w: f64, out: &mut Vec<(Family, f64)>) {
    if size > max_size.min(n) {
        out.push((f, w));
        return;
    }
    let cand = hollow(f, n, size);
    let q = p.get(size - 2).copied();
    for chosen in 0u64..1 << cand.len() {
        let mut weight = w;
        let mut g = f;
        for (i, &x) in cand.iter().enumerate() {
            let on = chosen & (1 << i) != 0;
            if let Some(q) = q {
                weight *= if on { q } else { 1.0 - q };
            }
            if on {
                g |= 1 << x;
            }
        }
        if weight > 0.0 {
            grow(g, n, size + 1, max_size, p, weight, out);
        }
    }
}

pub fn to_complex(f: Family, n: usize) -> SimplicialComplex {
    let facets = (1u32..1 << n).filter(|&x| contains(f, x) && x.count_ones() >= 2).map(vertices_of);
    SimplicialComplex::from_facets(n, facets).unwrap()
}

/// Critical counts per size `1..=n`, from the explicitly materialized
/// lexicographic matching.
pub fn critical_counts(f: Family, n: usize) -> Vec<u64> {
    let mut matched: Family = 0;
    for s in 1u32..1 << n {
        if !contains(f, s) {
            continue;
        }
        let min = s.trailing_zeros();
        if let Some(j) = (0..min).find(|&j| contains(f, s | 1 << j)) {
            matched |= 1 << s;
            matched |= 1 << (s | 1 << j);
        }
    }
    let mut c = vec![0; n];
    for s in 1u32..1 << n {
        if contains(f, s) && !contains(matched, s) {
            c[s.count_ones() as usize - 1] += 1;
        }
    }
    c
}

/// Weighted mean and variance of `g` over an enumeration.
pub fn moments(family: &[(Family, f64)], g: impl Fn(Family) -> f64) -> (f64, f64) {
    let total: f64 = family.iter().map(|(_, w)| w).sum();
    assert!((total - 1.0).abs() < 1e-9, "probabilities sum to {total}");
    let mean: f64 = family.iter().map(|&(f, w)| w * g(f)).sum();
    let second: f64 = family.iter().map(|&(f, w)| w * g(f) * g(f)).sum();
    (mean, second - mean * mean)
}

/// Weighted covariance of `g` and `h` over an enumeration.
pub fn covariance(family: &[(Family, f64)], g: impl Fn(Family) -> f64, h: impl Fn(Family) -> f64) -> f64 {
    let eg: f64 = family.iter().map(|&(f, w)| w * g(f)).sum();
    let eh: f64 = family.iter().map(|&(f, w)| w * h(f)).sum();
    let egh: f64 = family.iter().map(|&(f, w)| w * g(f) * h(f)).sum();
    egh - eg * eh
}

/// Pattern simplices with at least two vertices, as masks over `[m]`.
pub fn pattern_masks(m: usize, facets: &[&[u32]]) -> Vec<u32> {
    let mut masks: Vec<u32> = facets
        .iter()
        .flat_map(|facet| {
            let size = facet.len();
            (1u32..1 << size)
                .filter(|s| s.count_ones() >= 2)
                .map(move |s| (0..size).filter(|b| s & (1 << b) != 0).fold(0, |acc, b| acc | 1 << (facet[b] - 1)))
        })
        .collect();
    masks.sort_unstable();
    masks.dedup();
    assert!(masks.iter().all(|&x| x < 1 << m));
    masks
}

fn image(mask: u32, map: &[u32]) -> Vec<u32> {
    vertices_of(mask).iter().map(|&v| map[v as usize - 1]).sorted().collect()
}

/// Copies of a pattern in `k`: injective maps whose image lies in `k`,
/// divided by the number of automorphisms.
pub fn brute_force_count(k: &SimplicialComplex, m: usize, masks: &[u32]) -> u64 {
    let identity: Vec<u32> = (1..=m as u32).collect();
    let sorted_image = |map: &[u32]| -> Vec<Vec<u32>> { masks.iter().map(|&x| image(x, map)).sorted().collect() };
    let own = sorted_image(&identity);
    let automorphisms = (1..=m as u32).permutations(m).filter(|perm| sorted_image(perm) == own).count() as u64;
    let embeddings = (1..=k.n() as u32)
        .permutations(m)
        .filter(|map| masks.iter().all(|&x| k.contains_sorted(&image(x, map))))
        .count() as u64;
    assert_eq!(embeddings % automorphisms, 0);
    embeddings / automorphisms
}
