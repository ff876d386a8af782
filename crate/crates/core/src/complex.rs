//! Simplicial complexes on the vertex set `[n] = {1, ..., n}`.
//!
//! Simplices are stored by size in insertion-ordered hash sets; every layer is
//! kept in lexicographic order so iteration is deterministic.

use std::fmt;

use indexmap::IndexSet;
use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::bitset::VertexSet;
use crate::error::{Error, Result};

pub type VertexId = u32;

pub(crate) type Layer = IndexSet<Simplex, FxBuildHasher>;

/// Largest facet accepted by [`SimplicialComplex::from_facets`], which expands
/// every facet into all of its faces.
pub const MAX_FACET_SIZE: usize = 24;

/// A non-empty, strictly increasing list of 1-based vertex ids.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "Vec<VertexId>", try_from = "Vec<VertexId>")]
pub struct Simplex(SmallVec<[VertexId; 6]>);

impl Simplex {
    /// Sorts and deduplicates `vertices`. Vertex 0 is rejected.
    pub fn new(vertices: impl IntoIterator<Item = VertexId>) -> Result<Self> {
        let mut v: SmallVec<[VertexId; 6]> = vertices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        match v.first() {
            None => Err(Error::EmptySimplex),
            Some(0) => Err(Error::VertexOutOfRange { vertex: 0, n: 0 }),
            Some(_) => Ok(Self(v)),
        }
    }

    /// Caller guarantees `vertices` is non-empty and strictly increasing.
    pub(crate) fn from_sorted(vertices: &[VertexId]) -> Self {
        debug_assert!(!vertices.is_empty() && vertices.windows(2).all(|w| w[0] < w[1]));
        Self(SmallVec::from_slice(vertices))
    }

    pub fn vertex(v: VertexId) -> Self {
        Self(smallvec::smallvec![v])
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.0
    }

    /// Number of vertices.
    pub fn size(&self) -> usize {
        self.0.len()
    }

    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn min_vertex(&self) -> VertexId {
        self.0[0]
    }

    pub fn max_vertex(&self) -> VertexId {
        self.0[self.0.len() - 1]
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// `self ∪ {v}`; `v` must not already be a vertex.
    pub fn with_vertex(&self, v: VertexId) -> Self {
        let pos = self.0.partition_point(|&x| x < v);
        debug_assert!(self.0.get(pos) != Some(&v));
        let mut out = self.0.clone();
        out.insert(pos, v);
        Self(out)
    }

    /// Removes the vertex at position `idx`.
    pub fn without_index(&self, idx: usize) -> Self {
        let mut out = self.0.clone();
        out.remove(idx);
        Self(out)
    }

    /// Codimension-one faces, in order of the removed position.
    pub fn facets(&self) -> impl Iterator<Item = Simplex> + '_ {
        (0..self.0.len()).filter(|_| self.0.len() > 1).map(|i| self.without_index(i))
    }

    pub fn is_subset_of(&self, other: &Simplex) -> bool {
        self.0.iter().all(|v| other.contains_vertex(*v))
    }
}

impl fmt::Debug for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("}")
    }
}

impl From<Simplex> for Vec<VertexId> {
    fn from(s: Simplex) -> Self {
        s.0.into_vec()
    }
}

impl TryFrom<Vec<VertexId>> for Simplex {
    type Error = Error;
    fn try_from(v: Vec<VertexId>) -> Result<Self> {
        Simplex::new(v)
    }
}

/// Face counts `s_i` and hollow counts `h_i` for `i = 1..=d`.
///
/// `h_i` counts `(i+1)`-subsets whose whole boundary is present, filled or not.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonCounts {
    pub d: usize,
    /// `s[i-1] = s_i`.
    pub s: Vec<u64>,
    /// `h[i-1] = h_i`.
    pub h: Vec<u64>,
    /// Largest `i <= d` with `h_i > 0`, or 0.
    pub i_max: usize,
}

impl SkeletonCounts {
    pub fn s(&self, i: usize) -> u64 {
        self.s[i - 1]
    }

    pub fn h(&self, i: usize) -> u64 {
        self.h[i - 1]
    }
}

#[derive(Clone, Debug)]
pub struct SimplicialComplex {
    n: usize,
    /// `layers[k-1]` holds the simplices with `k` vertices; layer 0 is `[n]`.
    layers: Vec<Layer>,
    /// `adjacency[v]` is the neighbourhood of `v` in the 1-skeleton.
    adjacency: Vec<VertexSet>,
}

impl PartialEq for SimplicialComplex {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| a.len() == b.len() && a.iter().all(|s| b.contains(s)))
    }
}

impl Eq for SimplicialComplex {}

impl SimplicialComplex {
    /// The complex consisting of the `n` vertices only.
    pub fn discrete(n: usize) -> Self {
        let vertices: Layer = (1..=n as VertexId).map(Simplex::vertex).collect();
        Self::from_sorted_layers(n, vec![vertices])
    }

    /// Downward closure of `facets`. Every vertex of `[n]` is included.
    pub fn from_facets<I, F>(n: usize, facets: I) -> Result<Self>
    where
        I: IntoIterator<Item = F>,
        F: AsRef<[VertexId]>,
    {
        let mut layers: Vec<Vec<Simplex>> = vec![(1..=n as VertexId).map(Simplex::vertex).collect()];
        for facet in facets {
            let facet = Simplex::new(facet.as_ref().iter().copied())?;
            if facet.max_vertex() as usize > n {
                return Err(Error::VertexOutOfRange { vertex: facet.max_vertex(), n });
            }
            let size = facet.size();
            if size > MAX_FACET_SIZE {
                return Err(Error::CapExceeded(format!("facet of size {size} exceeds {MAX_FACET_SIZE}")));
            }
            if layers.len() < size {
                layers.resize_with(size, Vec::new);
            }
            let verts = facet.vertices();
            let mut buf: SmallVec<[VertexId; 8]> = SmallVec::new();
            for mask in 1u32..(1 << size) {
                if mask.count_ones() < 2 {
                    continue;
                }
                buf.clear();
                buf.extend((0..size).filter(|b| mask & (1 << b) != 0).map(|b| verts[b]));
                layers[buf.len() - 1].push(Simplex::from_sorted(&buf));
            }
        }
        let layers = layers
            .into_iter()
            .map(|mut l| {
                l.sort_unstable();
                l.dedup();
                l.into_iter().collect::<Layer>()
            })
            .collect();
        Ok(Self::from_sorted_layers(n, layers))
    }

    /// Layers must be downward closed and lexicographically sorted.
    pub(crate) fn from_sorted_layers(n: usize, mut layers: Vec<Layer>) -> Self {
        while layers.len() > 1 && layers.last().is_some_and(|l| l.is_empty()) {
            layers.pop();
        }
        let mut adjacency = vec![VertexSet::with_capacity(n); n + 1];
        if let Some(edges) = layers.get(1) {
            for e in edges {
                let (a, b) = (e.vertices()[0], e.vertices()[1]);
                adjacency[a as usize].insert(b);
                adjacency[b as usize].insert(a);
            }
        }
        Self { n, layers, adjacency }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Largest simplex size present (0 for the empty vertex set).
    pub fn max_size(&self) -> usize {
        self.layers.iter().rposition(|l| !l.is_empty()).map_or(0, |i| i + 1)
    }

    pub fn dimension(&self) -> Option<usize> {
        self.max_size().checked_sub(1)
    }

    /// Simplices with `size` vertices in lexicographic order.
    pub fn simplices(&self, size: usize) -> impl ExactSizeIterator<Item = &Simplex> + '_ {
        static EMPTY: std::sync::OnceLock<Layer> = std::sync::OnceLock::new();
        let layer = match size.checked_sub(1).and_then(|i| self.layers.get(i)) {
            Some(l) => l,
            None => EMPTY.get_or_init(Layer::default),
        };
        layer.iter()
    }

    pub(crate) fn layer(&self, size: usize) -> Option<&Layer> {
        size.checked_sub(1).and_then(|i| self.layers.get(i))
    }

    /// Number of simplices with `size` vertices.
    pub fn count(&self, size: usize) -> usize {
        self.layer(size).map_or(0, |l| l.len())
    }

    pub fn total_simplices(&self) -> usize {
        self.layers.iter().map(|l| l.len()).sum()
    }

    /// All simplices, by increasing size then lexicographically.
    pub fn iter(&self) -> impl Iterator<Item = &Simplex> + '_ {
        self.layers.iter().flat_map(|l| l.iter())
    }

    pub fn contains(&self, s: &Simplex) -> bool {
        self.layer(s.size()).is_some_and(|l| l.contains(s))
    }

    /// Membership for a strictly increasing vertex slice.
    pub fn contains_sorted(&self, vertices: &[VertexId]) -> bool {
        match vertices.len() {
            0 => false,
            1 => vertices[0] >= 1 && vertices[0] as usize <= self.n,
            2 => self.adjacent(vertices[0], vertices[1]),
            k => self.layer(k).is_some_and(|l| l.contains(&Simplex::from_sorted(vertices))),
        }
    }

    pub fn adjacent(&self, a: VertexId, b: VertexId) -> bool {
        self.adjacency.get(a as usize).is_some_and(|row| row.contains(b))
    }

    pub fn neighbors(&self, v: VertexId) -> &VertexSet {
        &self.adjacency[v as usize]
    }

    /// Vertices adjacent to every vertex of `s` (excluding `s` itself).
    pub fn common_neighbors(&self, s: &[VertexId]) -> VertexSet {
        let mut acc = self.adjacency[s[0] as usize].clone();
        for &v in &s[1..] {
            acc.intersect_with(&self.adjacency[v as usize]);
        }
        acc
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.layers.iter().enumerate().map(|(k, l)| if k % 2 == 0 { l.len() as i64 } else { -(l.len() as i64) }).sum()
    }

    /// Maximal simplices in lexicographic order.
    pub fn facets(&self) -> Vec<Simplex> {
        let mut out: Vec<Simplex> = self
            .iter()
            .filter(|s| {
                if s.size() == 1 {
                    return self.adjacency[s.min_vertex() as usize].is_empty();
                }
                !self.common_neighbors(s.vertices()).iter().any(|v| self.contains(&s.with_vertex(v)))
            })
            .cloned()
            .collect();
        out.sort();
        out
    }

    /// Calls `f` on every `size`-subset whose boundary lies in the complex, in
    /// lexicographic order. Sizes 1 and 2 enumerate all subsets.
    pub fn for_each_hollow(&self, size: usize, f: impl FnMut(Simplex)) {
        if size == 0 {
            return;
        }
        for_each_hollow_over(self.n, self.layer(size - 1), &self.adjacency, size, f);
    }

    pub fn hollow_count(&self, size: usize) -> u64 {
        let mut c = 0u64;
        self.for_each_hollow(size, |_| c += 1);
        c
    }

    pub fn skeleton_counts(&self, d: usize) -> SkeletonCounts {
        let mut s = Vec::with_capacity(d);
        let mut h = Vec::with_capacity(d);
        let mut exhausted = false;
        for i in 1..=d {
            s.push(self.count(i + 1) as u64);
            let hi = if exhausted { 0 } else { self.hollow_count(i + 1) };
            exhausted |= hi == 0;
            h.push(hi);
        }
        let i_max = h.iter().rposition(|&x| x > 0).map_or(0, |i| i + 1);
        SkeletonCounts { d, s, h, i_max }
    }

    /// Sub-complex of simplices with at most `max_size` vertices.
    pub fn skeleton(&self, max_size: usize) -> Self {
        let layers = self.layers.iter().take(max_size.max(1)).cloned().collect();
        Self::from_sorted_layers(self.n, layers)
    }

    /// Image under `v -> perm[v - 1]`, where `perm` is a permutation of `[n]`.
    pub fn relabel(&self, perm: &[VertexId]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch(format!("permutation of length {} for n = {}", perm.len(), self.n)));
        }
        let mut seen = vec![false; self.n + 1];
        for &v in perm {
            if v == 0 || v as usize > self.n || std::mem::replace(&mut seen[v as usize], true) {
                return Err(Error::InvalidParams("relabelling is not a permutation".into()));
            }
        }
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let mut v: Vec<Simplex> = l
                    .iter()
                    .map(|s| Simplex::new(s.vertices().iter().map(|&x| perm[x as usize - 1])).expect("non-empty"))
                    .collect();
                v.sort_unstable();
                v.into_iter().collect()
            })
            .collect();
        Ok(Self::from_sorted_layers(self.n, layers))
    }
}

/// Hollow-simplex enumeration shared by samplers and counters.
///
/// Each candidate `σ ∪ {v}` is produced once, from its lexicographically first
/// facet `σ` and a common neighbour `v > max σ`.
pub(crate) fn for_each_hollow_over(
    n: usize,
    lower: Option<&Layer>,
    adjacency: &[VertexSet],
    size: usize,
    mut f: impl FnMut(Simplex),
) {
    match size {
        0 => {}
        1 => (1..=n as VertexId).for_each(|v| f(Simplex::vertex(v))),
        2 => {
            for a in 1..=n as VertexId {
                for b in a + 1..=n as VertexId {
                    f(Simplex::from_sorted(&[a, b]));
                }
            }
        }
        _ => {
            let Some(lower) = lower else { return };
            let mut buf: SmallVec<[VertexId; 8]> = SmallVec::new();
            for sigma in lower {
                let verts = sigma.vertices();
                let mut common = adjacency[verts[0] as usize].clone();
                for &v in &verts[1..] {
                    common.intersect_with(&adjacency[v as usize]);
                }
                common.clear_up_to(sigma.max_vertex());
                'cand: for v in common.iter() {
                    // Adjacency covers the faces only while they are edges.
                    if size >= 4 {
                        for skip in 0..verts.len() {
                            buf.clear();
                            buf.extend(verts.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &x)| x));
                            buf.push(v);
                            if !lower.contains(&Simplex::from_sorted(&buf)) {
                                continue 'cand;
                            }
                        }
                    }
                    buf.clear();
                    buf.extend_from_slice(verts);
                    buf.push(v);
                    f(Simplex::from_sorted(&buf));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn figure_one() -> SimplicialComplex {
        SimplicialComplex::from_facets(5, [vec![1, 2], vec![2, 3], vec![1, 4], vec![3, 5], vec![3, 4, 5]]).unwrap()
    }

    #[test]
    fn closure_and_counts() {
        let k = figure_one();
        assert_eq!(k.count(1), 5);
        assert_eq!(k.count(2), 6);
        assert_eq!(k.count(3), 1);
        assert_eq!(k.euler_characteristic(), 0);
        assert_eq!(k.total_simplices(), 12);
        assert!(k.contains(&Simplex::new([4, 5]).unwrap()));
        assert!(!k.contains(&Simplex::new([1, 3]).unwrap()));
    }

    #[test]
    fn facets_round_trip() {
        let k = figure_one();
        let f: Vec<Vec<u32>> = k.facets().into_iter().map(Vec::from).collect();
        assert_eq!(f, vec![vec![1, 2], vec![1, 4], vec![2, 3], vec![3, 4, 5]]);
        let again = SimplicialComplex::from_facets(5, &f).unwrap();
        assert_eq!(again, k);
    }

    #[test]
    fn isolated_vertices_are_facets() {
        let k = SimplicialComplex::from_facets(3, [vec![1, 2]]).unwrap();
        let f: Vec<Vec<u32>> = k.facets().into_iter().map(Vec::from).collect();
        assert_eq!(f, vec![vec![1, 2], vec![3]]);
    }

    #[test]
    fn hollow_counts() {
        let k = figure_one();
        let c = k.skeleton_counts(3);
        assert_eq!(c.s, vec![6, 1, 0]);
        // Triangles {1,2,?}: none. Hollow triangles: {3,4,5} only.
        assert_eq!(c.h, vec![10, 1, 0]);
        assert_eq!(c.i_max, 2);
        let full = SimplicialComplex::from_facets(5, [vec![1, 2, 3, 4, 5]]).unwrap();
        assert_eq!(full.skeleton_counts(4).h, vec![10, 10, 5, 1]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SimplicialComplex::from_facets(3, [vec![1, 4]]).is_err());
        assert!(SimplicialComplex::from_facets(3, [vec![0, 1]]).is_err());
        assert!(SimplicialComplex::from_facets(3, [Vec::<u32>::new()]).is_err());
    }

    #[test]
    fn relabel_preserves_counts() {
        let k = figure_one();
        let r = k.relabel(&[5, 4, 3, 2, 1]).unwrap();
        assert_eq!(r.count(2), 6);
        assert!(r.contains(&Simplex::new([1, 2, 3]).unwrap()));
        assert!(k.relabel(&[1, 1, 2, 3, 4]).is_err());
    }
}
