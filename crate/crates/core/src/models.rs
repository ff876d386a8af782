//! Random complex samplers: the multi-parameter `X(n, p)` model and soft
//! random geometric complexes on uniform points in `[0, 1]^D`.
//!
//! Both samplers share one inductive loop. Dimension `k` draws one uniform
//! per hollow `k`-simplex from ChaCha stream `k`, in lexicographic candidate
//! order, so a constant-kernel geometric model reproduces `X(n, p)` exactly
//! under the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::VertexSet;
use crate::complex::{for_each_hollow_over, Layer, Simplex, SimplicialComplex};
use crate::error::{Error, Result};

/// Validated parameters of `X(n, p)`.
///
/// `p[i-1] = p_i`. Trailing zeros are trimmed, so `d = p.len()` is the last
/// dimension with positive probability and `k_prime` counts the leading ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n: usize,
    p: Vec<f64>,
    k_prime: usize,
    d: usize,
}

impl ModelParams {
    pub fn new(n: usize, p: impl Into<Vec<f64>>) -> Result<Self> {
        let mut p = p.into();
        if n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidParams(format!("probability {bad} outside [0, 1]")));
        }
        while p.last() == Some(&0.0) {
            p.pop();
        }
        if let Some(i) = p.iter().position(|&x| x == 0.0) {
            return Err(Error::InvalidParams(format!(
                "p_{} = 0 is followed by a positive entry; zeros may only trail",
                i + 1
            )));
        }
        let k_prime = p.iter().take_while(|&&x| x == 1.0).count();
        let d = p.len();
        Ok(Self { n, p, k_prime, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `p_i`, zero beyond `d`. `p_0 = 1` by convention.
    pub fn p(&self, i: usize) -> f64 {
        match i {
            0 => 1.0,
            _ => self.p.get(i - 1).copied().unwrap_or(0.0),
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn k_prime(&self) -> usize {
        self.k_prime
    }

    pub fn d(&self) -> usize {
        self.d
    }
}

/// Replicate seed. Distinct `(master, replicate)` pairs give distinct ChaCha
/// keys; the stream selects the dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub replicate: u64,
}

impl Seed {
    pub fn new(master: u64, replicate: u64) -> Self {
        Self { master, replicate }
    }

    /// Master seed for an indexed sub-experiment, e.g. a grid point.
    pub fn derive_master(master: u64, index: u64) -> u64 {
        splitmix64(splitmix64(master) ^ index.wrapping_mul(0xd6e8_feb8_6659_fd93))
    }

    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let words = [
            self.master,
            self.replicate,
            splitmix64(self.master ^ splitmix64(self.replicate)),
            splitmix64(self.replicate ^ 0x5851_f42d_4c95_7f2d),
        ];
        let mut key = [0u8; 32];
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream);
        rng
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Probability of filling a hollow simplex.
pub trait InclusionRule {
    /// Largest dimension that can receive positive probability.
    fn max_dim(&self) -> usize;
    fn probability(&self, simplex: &Simplex) -> f64;
}

impl InclusionRule for ModelParams {
    fn max_dim(&self) -> usize {
        self.d
    }

    fn probability(&self, simplex: &Simplex) -> f64 {
        self.p(simplex.dim())
    }
}

/// Inductive sampler shared by every model.
pub fn sample_with_rule(n: usize, rule: &impl InclusionRule, seed: Seed) -> SimplicialComplex {
    let vertices: Layer = (1..=n as u32).map(Simplex::vertex).collect();
    let mut layers = vec![vertices];
    let mut adjacency = vec![VertexSet::with_capacity(n); n + 1];
    for dim in 1..=rule.max_dim().min(n.saturating_sub(1)) {
        let mut rng = seed.rng(dim as u64);
        let mut next = Layer::default();
        for_each_hollow_over(n, layers.last(), &adjacency, dim + 1, |t| {
            let u: f64 = rng.random();
            if u < rule.probability(&t) {
                next.insert(t);
            }
        });
        if dim == 1 {
            for e in &next {
                let (a, b) = (e.vertices()[0], e.vertices()[1]);
                adjacency[a as usize].insert(b);
                adjacency[b as usize].insert(a);
            }
        }
        if next.is_empty() {
            break;
        }
        layers.push(next);
    }
    SimplicialComplex::from_sorted_layers(n, layers)
}

pub fn sample_multiparameter(params: &ModelParams, seed: Seed) -> SimplicialComplex {
    sample_with_rule(params.n, params, seed)
}

/// Inclusion function for one dimension of a soft geometric model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phi {
    Constant(f64),
    /// 1 when the simplex volume is at most `eps1`, 1/2 strictly between
    /// `eps1` and `eps2`, 0 otherwise. The volume of an edge is its length.
    Threshold {
        eps1: f64,
        eps2: f64,
    },
}

impl Phi {
    pub fn eval(&self, volume: impl FnOnce() -> f64) -> f64 {
        match *self {
            Phi::Constant(c) => c,
            Phi::Threshold { eps1, eps2 } => {
                let m = volume();
                if m <= eps1 {
                    1.0
                } else if m < eps2 {
                    0.5
                } else {
                    0.0
                }
            }
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Phi::Constant(c) if *c == 0.0)
    }
}

/// `phis[i-1] = φ_i`; dimensions past the end get probability 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricKernel {
    phis: Vec<Phi>,
}

impl GeometricKernel {
    pub fn new(phis: Vec<Phi>) -> Result<Self> {
        for (i, phi) in phis.iter().enumerate() {
            match *phi {
                Phi::Constant(c) if !(0.0..=1.0).contains(&c) => {
                    return Err(Error::InvalidParams(format!("φ_{} = {c} outside [0, 1]", i + 1)));
                }
                Phi::Threshold { eps1, eps2 } if !(eps1 >= 0.0 && eps1 <= eps2) => {
                    return Err(Error::InvalidParams(format!(
                        "φ_{} needs 0 <= eps1 <= eps2, got ({eps1}, {eps2})",
                        i + 1
                    )));
                }
                _ => {}
            }
        }
        Ok(Self { phis })
    }

    /// Constant kernel matching `X(n, p)`.
    pub fn constant(params: &ModelParams) -> Self {
        Self { phis: params.probs().iter().map(|&p| Phi::Constant(p)).collect() }
    }

    pub fn phi(&self, dim: usize) -> Phi {
        dim.checked_sub(1).and_then(|i| self.phis.get(i)).copied().unwrap_or(Phi::Constant(0.0))
    }

    pub fn max_dim(&self) -> usize {
        self.phis.iter().rposition(|p| !p.is_zero()).map_or(0, |i| i + 1)
    }

    /// Highest dimension whose φ depends on geometry.
    pub fn max_geometric_dim(&self) -> usize {
        self.phis.iter().rposition(|p| matches!(p, Phi::Threshold { .. })).map_or(0, |i| i + 1)
    }
}

/// Points indexed by vertex id minus one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub ambient_dim: usize,
    pub points: Vec<Vec<f64>>,
}

impl PointCloud {
    /// Uniform points in `[0, 1]^ambient_dim`, drawn from stream 0.
    pub fn sample_uniform(n: usize, ambient_dim: usize, seed: Seed) -> Self {
        let mut rng = seed.rng(0);
        let points = (0..n).map(|_| (0..ambient_dim).map(|_| rng.random::<f64>()).collect()).collect();
        Self { ambient_dim, points }
    }

    pub fn point(&self, v: u32) -> &[f64] {
        &self.points[v as usize - 1]
    }

    pub fn volume(&self, s: &Simplex) -> f64 {
        let pts: smallvec::SmallVec<[&[f64]; 6]> = s.vertices().iter().map(|&v| self.point(v)).collect();
        gram_volume(&pts)
    }
}

struct GeometricRule<'a> {
    points: &'a PointCloud,
    kernel: &'a GeometricKernel,
}

impl InclusionRule for GeometricRule<'_> {
    fn max_dim(&self) -> usize {
        self.kernel.max_dim()
    }

    fn probability(&self, simplex: &Simplex) -> f64 {
        self.kernel.phi(simplex.dim()).eval(|| self.points.volume(simplex))
    }
}

pub fn sample_soft_geometric(
    n: usize,
    ambient_dim: usize,
    kernel: &GeometricKernel,
    seed: Seed,
) -> Result<(PointCloud, SimplicialComplex)> {
    let points = PointCloud::sample_uniform(n, ambient_dim, seed);
    let k = sample_on_points(&points, kernel, seed)?;
    Ok((points, k))
}

/// Samples on a fixed point cloud; the point stream of `seed` is unused.
pub fn sample_on_points(points: &PointCloud, kernel: &GeometricKernel, seed: Seed) -> Result<SimplicialComplex> {
    let g = kernel.max_geometric_dim();
    if g > points.ambient_dim {
        return Err(Error::DimensionMismatch(format!(
            "a {g}-dimensional volume threshold needs ambient dimension >= {g}, got {}",
            points.ambient_dim
        )));
    }
    Ok(sample_with_rule(points.points.len(), &GeometricRule { points, kernel }, seed))
}

/// `k`-volume of the simplex spanned by `k + 1` points, `sqrt(det G) / k!`
/// where `G` is the Gram matrix of the edge vectors from the first point.
pub fn simplex_volume(points: &[&[f64]]) -> Result<f64> {
    let Some(first) = points.first() else {
        return Err(Error::EmptySimplex);
    };
    let k = points.len() - 1;
    let ambient = first.len();
    if points.iter().any(|p| p.len() != ambient) {
        return Err(Error::DimensionMismatch("points of different dimensions".into()));
    }
    if k > ambient {
        return Err(Error::DimensionMismatch(format!("{k}-volume in ambient dimension {ambient}")));
    }
    Ok(gram_volume(points))
}

pub fn triangle_area(a: &[f64], b: &[f64], c: &[f64]) -> Result<f64> {
    simplex_volume(&[a, b, c])
}

fn gram_volume(points: &[&[f64]]) -> f64 {
    let k = points.len() - 1;
    let o = points[0];
    let edge = |i: usize| points[i].iter().zip(o).map(|(x, y)| x - y);
    let dot = |i: usize, j: usize| edge(i).zip(edge(j)).map(|(a, b)| a * b).sum::<f64>();
    match k {
        0 => 1.0,
        1 => dot(1, 1).sqrt(),
        _ => {
            let g = nalgebra::DMatrix::from_fn(k, k, |i, j| dot(i + 1, j + 1));
            let fact: f64 = (1..=k).map(|x| x as f64).product();
            g.determinant().max(0.0).sqrt() / fact
        }
    }
}

/// Distance threshold at which a fraction `density` of point pairs in the
/// unit cube are closer, estimated from `samples` random pairs.
pub fn calibrate_edge_threshold(ambient_dim: usize, density: f64, samples: usize, seed: Seed) -> Result<f64> {
    if !(0.0..=1.0).contains(&density) || samples == 0 || ambient_dim == 0 {
        return Err(Error::InvalidParams("calibration needs density in [0, 1] and positive sizes".into()));
    }
    let mut rng = seed.rng(0);
    let mut d: Vec<f64> = (0..samples)
        .map(|_| (0..ambient_dim).map(|_| (rng.random::<f64>() - rng.random::<f64>()).powi(2)).sum::<f64>().sqrt())
        .collect();
    d.sort_by(f64::total_cmp);
    let idx = ((density * samples as f64).ceil() as usize).clamp(1, samples) - 1;
    Ok(d[idx])
}

/// Built-in soft geometric models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometricModel {
    /// Geometric tetrahedra over a 1/2-density 2-skeleton.
    Tetra,
    /// Geometric triangles over a 1/2-density graph.
    Tri,
    /// Geometric edges with every higher face filled with probability 1/2.
    Edge,
}

/// Threshold at which the tetra model's volume filter is switched off.
pub const TETRA_VOLUME_THRESHOLD: f64 = 0.09;
/// Threshold at which the tri model's area filter is switched off.
pub const TRI_AREA_THRESHOLD: f64 = 0.09;
/// Default edge-length threshold of the edge model.
pub const EDGE_DISTANCE_THRESHOLD: f64 = 0.4924;

impl GeometricModel {
    pub const ALL: [GeometricModel; 3] = [GeometricModel::Tetra, GeometricModel::Tri, GeometricModel::Edge];

    pub fn name(self) -> &'static str {
        match self {
            GeometricModel::Tetra => "tetra",
            GeometricModel::Tri => "tri",
            GeometricModel::Edge => "edge",
        }
    }

    pub fn default_n(self) -> usize {
        match self {
            GeometricModel::Tetra => 150,
            GeometricModel::Tri | GeometricModel::Edge => 75,
        }
    }

    pub fn default_ambient_dim(self) -> usize {
        match self {
            GeometricModel::Tetra => 7,
            GeometricModel::Tri | GeometricModel::Edge => 3,
        }
    }

    /// Top dimension fitted by the goodness-of-fit tests.
    pub fn default_fit_dim(self) -> usize {
        match self {
            GeometricModel::Tetra | GeometricModel::Edge => 3,
            GeometricModel::Tri => 2,
        }
    }

    /// Kernel for thresholds `(eps1, eps2)` on `n` points.
    pub fn kernel(self, eps1: f64, eps2: f64, n: usize) -> Result<GeometricKernel> {
        let t = Phi::Threshold { eps1, eps2 };
        let half = Phi::Constant(0.5);
        let phis = match self {
            GeometricModel::Tetra => vec![half, half, t],
            GeometricModel::Tri => vec![half, t],
            GeometricModel::Edge => std::iter::once(t).chain(std::iter::repeat_n(half, n.saturating_sub(2))).collect(),
        };
        GeometricKernel::new(phis)
    }
}

impl std::str::FromStr for GeometricModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown geometric model `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        let p = ModelParams::new(10, vec![1.0, 1.0, 0.5, 0.0]).unwrap();
        assert_eq!((p.k_prime(), p.d()), (2, 3));
        assert_eq!(p.p(4), 0.0);
        assert!(ModelParams::new(10, vec![0.5, 0.0, 0.5]).is_err());
        assert!(ModelParams::new(10, vec![1.5]).is_err());
        assert!(ModelParams::new(0, vec![0.5]).is_err());
        assert_eq!(ModelParams::new(5, vec![0.0]).unwrap().d(), 0);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let p = ModelParams::new(20, vec![0.5, 0.5]).unwrap();
        let a = sample_multiparameter(&p, Seed::new(1, 0));
        let b = sample_multiparameter(&p, Seed::new(1, 0));
        let c = sample_multiparameter(&p, Seed::new(1, 1));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn extreme_probabilities() {
        let full = sample_multiparameter(&ModelParams::new(6, vec![1.0, 1.0, 1.0]).unwrap(), Seed::new(3, 0));
        assert_eq!((full.count(2), full.count(3), full.count(4), full.count(5)), (15, 20, 15, 0));
        let empty = sample_multiparameter(&ModelParams::new(6, vec![0.0]).unwrap(), Seed::new(3, 0));
        assert_eq!(empty.total_simplices(), 6);
    }

    #[test]
    fn constant_kernel_matches_multiparameter() {
        let p = ModelParams::new(25, vec![0.6, 0.4, 0.3]).unwrap();
        for r in 0..5 {
            let seed = Seed::new(99, r);
            let x = sample_multiparameter(&p, seed);
            let (_, g) = sample_soft_geometric(25, 2, &GeometricKernel::constant(&p), seed).unwrap();
            assert_eq!(x, g);
        }
    }

    #[test]
    fn volumes() {
        let a = [0.0, 0.0, 0.0];
        let b = [3.0, 0.0, 0.0];
        let c = [0.0, 4.0, 0.0];
        let d = [0.0, 0.0, 6.0];
        assert!((simplex_volume(&[&a, &b]).unwrap() - 3.0).abs() < 1e-12);
        assert!((triangle_area(&a, &b, &c).unwrap() - 6.0).abs() < 1e-12);
        assert!((simplex_volume(&[&a, &b, &c, &d]).unwrap() - 12.0).abs() < 1e-12);
        assert!(simplex_volume(&[&a[..2], &b[..2], &c[..2], &d[..2]]).is_err());
        assert_eq!(triangle_area(&a, &b, &[6.0, 0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn kernel_checks() {
        assert!(GeometricKernel::new(vec![Phi::Threshold { eps1: 0.5, eps2: 0.1 }]).is_err());
        assert!(GeometricKernel::new(vec![Phi::Constant(1.2)]).is_err());
        let k = GeometricModel::Tetra.kernel(0.01, 0.02, 150).unwrap();
        assert_eq!((k.max_dim(), k.max_geometric_dim()), (3, 3));
        assert!(sample_soft_geometric(10, 2, &k, Seed::new(0, 0)).is_err());
        let e = GeometricModel::Edge.kernel(0.0, 2.0, 10).unwrap();
        assert_eq!(e.max_dim(), 9);
    }

    #[test]
    fn threshold_levels() {
        let t = Phi::Threshold { eps1: 0.2, eps2: 0.5 };
        assert_eq!(t.eval(|| 0.2), 1.0);
        assert_eq!(t.eval(|| 0.3), 0.5);
        assert_eq!(t.eval(|| 0.5), 0.0);
    }
}
