//! Counts of copies of a small connected pattern complex.
//!
//! For a pattern `L` on `[m]`, `T_L` sums over `m`-subsets `s` of `[n]` and over
//! the labelled complexes `L'` isomorphic to `L`, counting those whose
//! order-preserving image on `s` lies in `K`.

use std::collections::BTreeSet;

use itertools::Itertools;
use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{Simplex, SimplicialComplex, VertexId};
use crate::error::{Error, Result};
use crate::models::ModelParams;
use crate::moments::binomial;

pub const MAX_PATTERN_VERTICES: usize = 8;

/// Largest `|[L]| · |[M]|` enumerated by [`exact_covariance`].
pub const MAX_COVARIANCE_PAIRS: usize = 4_000_000;

/// A connected complex on `[m]`, `m <= 8`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternComplex {
    base: SimplicialComplex,
    /// `e[i-1]` = number of `i`-simplices.
    e: Vec<u64>,
}

impl PatternComplex {
    pub fn new(base: SimplicialComplex) -> Result<Self> {
        let m = base.n();
        if m == 0 || m > MAX_PATTERN_VERTICES {
            return Err(Error::InvalidPattern(format!("patterns need 1..={MAX_PATTERN_VERTICES} vertices, got {m}")));
        }
        let mut uf = UnionFind::<usize>::new(m + 1);
        for e in base.simplices(2) {
            uf.union(e.vertices()[0] as usize, e.vertices()[1] as usize);
        }
        if (2..=m).any(|v| !uf.equiv(1, v)) {
            return Err(Error::InvalidPattern("pattern is disconnected".into()));
        }
        let e = (2..=base.max_size()).map(|s| base.count(s) as u64).collect();
        Ok(Self { base, e })
    }

    pub fn from_facets<F: AsRef<[VertexId]>>(m: usize, facets: impl IntoIterator<Item = F>) -> Result<Self> {
        Self::new(SimplicialComplex::from_facets(m, facets)?)
    }

    /// The filled simplex on `size` vertices.
    pub fn simplex(size: usize) -> Result<Self> {
        Self::from_facets(size, [(1..=size as VertexId).collect::<Vec<_>>()])
    }

    pub fn m(&self) -> usize {
        self.base.n()
    }

    pub fn complex(&self) -> &SimplicialComplex {
        &self.base
    }

    /// Number of `i`-simplices, `i >= 1`.
    pub fn e(&self, i: usize) -> u64 {
        i.checked_sub(1).and_then(|x| self.e.get(x)).copied().unwrap_or(0)
    }

    fn inclusion_probability(&self, params: &ModelParams) -> f64 {
        self.e.iter().enumerate().map(|(i, &c)| params.p(i + 1).powi(c as i32)).product()
    }
}

/// Distinct labelled complexes on `[m]` isomorphic to a pattern, each given
/// by its simplices with at least two vertices as vertex bitmasks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsoClass {
    pub m: usize,
    pub members: Vec<Vec<u32>>,
}

impl IsoClass {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn complexes(&self) -> Vec<SimplicialComplex> {
        self.members
            .iter()
            .map(|masks| {
                let facets = masks.iter().map(|&x| mask_vertices(x).collect::<Vec<_>>());
                SimplicialComplex::from_facets(self.m, facets).expect("valid member")
            })
            .collect()
    }
}

fn mask_of(s: &Simplex) -> u32 {
    s.vertices().iter().fold(0, |acc, &v| acc | 1 << (v - 1))
}

fn mask_vertices(mask: u32) -> impl Iterator<Item = VertexId> {
    (0..32).filter(move |b| mask & (1 << b) != 0).map(|b| b + 1)
}

pub fn iso_class(l: &PatternComplex) -> IsoClass {
    let m = l.m();
    let masks: Vec<u32> = l.base.iter().filter(|s| s.size() >= 2).map(mask_of).collect();
    let members: BTreeSet<Vec<u32>> = (0..m)
        .permutations(m)
        .map(|perm| {
            let mut image: Vec<u32> = masks
                .iter()
                .map(|&x| (0..m).filter(|&b| x & (1 << b) != 0).fold(0, |acc, b| acc | 1 << perm[b]))
                .collect();
            image.sort_unstable();
            image
        })
        .collect();
    IsoClass { m, members: members.into_iter().collect() }
}

/// Member simplices grouped by their largest position, as position lists.
struct CountPlan {
    m: usize,
    by_max: Vec<Vec<Vec<Vec<usize>>>>,
}

impl CountPlan {
    fn new(class: &IsoClass) -> Self {
        let m = class.m;
        let by_max = class
            .members
            .iter()
            .map(|masks| {
                let mut groups = vec![Vec::new(); m];
                for &x in masks {
                    let pos: Vec<usize> = (0..m).filter(|&b| x & (1 << b) != 0).collect();
                    groups[*pos.last().unwrap()].push(pos);
                }
                groups
            })
            .collect();
        Self { m, by_max }
    }

    fn dfs(
        &self,
        k: &SimplicialComplex,
        depth: usize,
        chosen: &mut [VertexId; MAX_PATTERN_VERTICES],
        live: &[usize],
    ) -> u64 {
        if depth == self.m {
            return live.len() as u64;
        }
        let n = k.n() as VertexId;
        let start = if depth == 0 { 1 } else { chosen[depth - 1] + 1 };
        let end = n - (self.m - depth - 1) as VertexId;
        let mut total = 0;
        let mut buf: Vec<VertexId> = Vec::with_capacity(self.m);
        for v in start..=end {
            chosen[depth] = v;
            let next: Vec<usize> = live
                .iter()
                .copied()
                .filter(|&mem| {
                    self.by_max[mem][depth].iter().all(|pos| {
                        buf.clear();
                        buf.extend(pos.iter().map(|&p| chosen[p]));
                        k.contains_sorted(&buf)
                    })
                })
                .collect();
            if !next.is_empty() {
                total += self.dfs(k, depth + 1, chosen, &next);
            }
        }
        total
    }
}

/// `T_L(K)`.
pub fn count_subcomplexes(k: &SimplicialComplex, l: &PatternComplex) -> u64 {
    let m = l.m();
    if k.n() < m {
        return 0;
    }
    let class = iso_class(l);
    let plan = CountPlan::new(&class);
    let all: Vec<usize> = (0..class.len()).collect();
    if m == 1 {
        return k.n() as u64;
    }
    (1..=(k.n() - m + 1) as VertexId)
        .into_par_iter()
        .map(|v| {
            let mut chosen = [0; MAX_PATTERN_VERTICES];
            chosen[0] = v;
            let live: Vec<usize> = all.iter().copied().filter(|&mem| plan.by_max[mem][0].is_empty()).collect();
            plan.dfs(k, 1, &mut chosen, &live)
        })
        .sum()
}

/// `E[T_L] = C(n, m) |[L]| Π_i p_i^{e_i(L)}`.
pub fn expected_count(l: &PatternComplex, params: &ModelParams) -> f64 {
    binomial(params.n(), l.m()) * iso_class(l).len() as f64 * l.inclusion_probability(params)
}

/// `Cov(T_L, T_M)` summed over the overlap size `a` of the two vertex sets.
///
/// For each `a` the pair covariance is evaluated on one placement with
/// `|s ∩ u| = a`, which suffices because `X_s` counts every labelled copy on
/// `s` and is therefore invariant under relabelling.
pub fn exact_covariance(l: &PatternComplex, m: &PatternComplex, params: &ModelParams) -> Result<f64> {
    let (cl, cm) = (iso_class(l), iso_class(m));
    if cl.len().saturating_mul(cm.len()) > MAX_COVARIANCE_PAIRS {
        return Err(Error::CapExceeded(format!(
            "{} x {} labelled pattern pairs exceed {MAX_COVARIANCE_PAIRS}",
            cl.len(),
            cm.len()
        )));
    }
    let n = params.n();
    let (ml, mm) = (l.m(), m.m());
    let probs: Vec<f64> = (0..=ml + mm).map(|i| params.p(i)).collect();
    let weight =
        |masks: &mut dyn Iterator<Item = u32>| -> f64 { masks.map(|x| probs[x.count_ones() as usize - 1]).product() };
    let mean_l = cl.len() as f64 * l.inclusion_probability(params);
    let mean_m = cm.len() as f64 * m.inclusion_probability(params);
    let mut total = 0.0;
    for a in params.k_prime() + 2..=ml.min(mm) {
        if ml + mm - a > n {
            continue;
        }
        let shift = ml - a;
        let joint: f64 = cl
            .members
            .par_iter()
            .map(|lm| {
                cm.members
                    .iter()
                    .map(|mmasks| {
                        let mut union: Vec<u32> =
                            lm.iter().copied().chain(mmasks.iter().map(|&x| x << shift)).collect();
                        union.sort_unstable();
                        union.dedup();
                        weight(&mut union.into_iter())
                    })
                    .sum::<f64>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        let pairs = binomial(n, ml) * binomial(ml, a) * binomial(n - ml, mm - a);
        total += pairs * (joint - mean_l * mean_m);
    }
    Ok(total)
}
