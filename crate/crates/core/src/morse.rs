//! Lexicographic discrete Morse matching.
//!
//! A simplex `s` is paired with `s ∪ {j}` for the smallest `j < min s` such
//! that `s ∪ {j}` is in the complex. Classification of a single simplex only
//! inspects cofaces obtained by adding smaller vertices.

use petgraph::graph::DiGraph;
use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::complex::{Simplex, SimplicialComplex, VertexId};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// Paired with a coface.
    MatchedUp,
    /// Paired with a face.
    MatchedDown,
    Critical,
}

/// Smallest `j < bound` with `vertices ∪ {j}` in `k`. Requires `bound <= min`.
fn first_coface_vertex_below(k: &SimplicialComplex, vertices: &[VertexId], bound: VertexId) -> Option<VertexId> {
    if vertices.len() == 1 {
        return k.neighbors(vertices[0]).iter().take_while(|&j| j < bound).next();
    }
    let common = k.common_neighbors(vertices);
    let mut buf: smallvec::SmallVec<[VertexId; 8]> = smallvec::SmallVec::with_capacity(vertices.len() + 1);
    let found = common.iter().take_while(|&j| j < bound).find(|&j| {
        buf.clear();
        buf.push(j);
        buf.extend_from_slice(vertices);
        k.contains_sorted(&buf)
    });
    found
}

/// Classifies `t`, which must belong to `k`.
pub fn classify(k: &SimplicialComplex, t: &Simplex) -> Result<Classification> {
    if !k.contains(t) {
        return Err(Error::NotInComplex(t.to_string()));
    }
    Ok(classify_unchecked(k, t))
}

pub(crate) fn classify_unchecked(k: &SimplicialComplex, t: &Simplex) -> Classification {
    let v = t.vertices();
    if first_coface_vertex_below(k, v, v[0]).is_some() {
        return Classification::MatchedUp;
    }
    // `t` is matched down iff `v[0]` is the smallest vertex extending `t \ {v[0]}`.
    if v.len() >= 2 && first_coface_vertex_below(k, &v[1..], v[0]).is_none() {
        return Classification::MatchedDown;
    }
    Classification::Critical
}

/// Critical simplices per size: `counts[k-1]` for size `k <= max_size`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalCounts {
    pub counts: Vec<u64>,
}

impl CriticalCounts {
    /// Number of critical simplices with `size` vertices.
    pub fn size(&self, size: usize) -> u64 {
        size.checked_sub(1).and_then(|i| self.counts.get(i)).copied().unwrap_or(0)
    }

    /// Alternating sum, which equals the Euler characteristic when every
    /// nonempty size is covered.
    pub fn euler(&self) -> i64 {
        self.counts.iter().enumerate().map(|(i, &c)| if i % 2 == 0 { c as i64 } else { -(c as i64) }).sum()
    }
}

pub fn critical_counts(k: &SimplicialComplex, max_size: usize) -> CriticalCounts {
    let counts = (1..=max_size)
        .map(|size| match k.layer(size) {
            None => 0,
            Some(layer) => (0..layer.len())
                .into_par_iter()
                .filter(|&i| classify_unchecked(k, &layer[i]) == Classification::Critical)
                .count() as u64,
        })
        .collect();
    CriticalCounts { counts }
}

/// Pairs `(face, coface)` in lexicographic order of the face.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<(Simplex, Simplex)>,
}

impl Matching {
    pub fn critical<'a>(&self, k: &'a SimplicialComplex) -> Vec<&'a Simplex> {
        let matched: FxHashSet<&Simplex> = self.pairs.iter().flat_map(|(a, b)| [a, b]).collect();
        k.iter().filter(|s| !matched.contains(s)).collect()
    }
}

pub fn lexicographic_matching(k: &SimplicialComplex) -> Matching {
    let mut pairs: Vec<(Simplex, Simplex)> = k
        .iter()
        .filter_map(|s| {
            first_coface_vertex_below(k, s.vertices(), s.min_vertex()).map(|j| (s.clone(), s.with_vertex(j)))
        })
        .collect();
    pairs.sort();
    Matching { pairs }
}

/// Checks that `v` is a partial matching on `k` and that its modified Hasse
/// diagram has no directed cycle. Malformed matchings are errors.
pub fn verify_acyclic(k: &SimplicialComplex, v: &Matching) -> Result<bool> {
    let mut partner: FxHashMap<&Simplex, &Simplex> = FxHashMap::default();
    for (a, b) in &v.pairs {
        if !k.contains(a) || !k.contains(b) {
            return Err(Error::InvalidMatching(format!("pair ({a}, {b}) leaves the complex")));
        }
        if b.size() != a.size() + 1 || !a.is_subset_of(b) {
            return Err(Error::InvalidMatching(format!("({a}, {b}) is not a codimension-one pair")));
        }
        for s in [a, b] {
            if partner.insert(s, if s == a { b } else { a }).is_some() {
                return Err(Error::InvalidMatching(format!("{s} is matched twice")));
            }
        }
    }
    let mut graph: DiGraph<(), ()> = DiGraph::new();
    let index: FxHashMap<&Simplex, _> = k.iter().map(|s| (s, graph.add_node(()))).collect();
    for s in k.iter().filter(|s| s.size() >= 2) {
        for f in s.facets() {
            let (fi, si) = (index[&f], index[s]);
            if partner.get(&f).is_some_and(|p| *p == s) {
                graph.add_edge(fi, si, ());
            } else {
                graph.add_edge(si, fi, ());
            }
        }
    }
    Ok(!petgraph::algo::is_cyclic_directed(&graph))
}
