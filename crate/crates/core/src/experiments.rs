//! Replicated experiments: goodness-of-fit sweeps over soft geometric
//! threshold grids and Monte-Carlo checks of the closed-form moments.
//!
//! Every replicate derives its own seed from the master seed, the grid index
//! and the replicate index, and results are gathered in index order, so the
//! output does not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{gof, mle_fit, GofOptions, Statistic};
use crate::models::{sample_multiparameter, sample_soft_geometric, GeometricModel, ModelParams, Seed};
use crate::moments::{critical_mean_exact, critical_variance_exact, limiting_covariance, mle_scaling};
use crate::morse::critical_counts;
use crate::stats;
use crate::subcomplex::{count_subcomplexes, exact_covariance, expected_count, PatternComplex};

pub const DEFAULT_REPS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub eps1: f64,
    pub eps2: f64,
}

const TETRA_GRID: &str = include_str!("../grids/tetra.json");
const TRI_GRID: &str = include_str!("../grids/tri.json");
const EDGE_GRID: &str = include_str!("../grids/edge.json");

pub fn default_grid(model: GeometricModel) -> Vec<GridPoint> {
    let text = match model {
        GeometricModel::Tetra => TETRA_GRID,
        GeometricModel::Tri => TRI_GRID,
        GeometricModel::Edge => EDGE_GRID,
    };
    serde_json::from_str(text).expect("bundled grid is valid")
}

/// Parses a grid: either a list of `{eps1, eps2}` or an object mapping model
/// names to such lists.
pub fn parse_grid(text: &str, model: GeometricModel) -> Result<Vec<GridPoint>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum GridFile {
        List(Vec<GridPoint>),
        ByModel(std::collections::BTreeMap<String, Vec<GridPoint>>),
    }
    let grid = match serde_json::from_str::<GridFile>(text)? {
        GridFile::List(g) => g,
        GridFile::ByModel(mut m) => m
            .remove(model.name())
            .ok_or_else(|| Error::Config(format!("grid file has no entry for model `{}`", model.name())))?,
    };
    if let Some(bad) = grid.iter().find(|g| !(g.eps1 >= 0.0 && g.eps1 <= g.eps2)) {
        return Err(Error::Config(format!("grid point ({}, {}) needs 0 <= eps1 <= eps2", bad.eps1, bad.eps2)));
    }
    Ok(grid)
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::Config("thread count must be positive".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// `f(Seed::new(master, r))` for `r in 0..reps`, in order.
pub fn replicate<R: Send>(reps: usize, master: u64, f: impl Fn(Seed) -> R + Sync) -> Vec<R> {
    (0..reps as u64).into_par_iter().map(|r| f(Seed::new(master, r))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub model: GeometricModel,
    pub grid: Vec<GridPoint>,
    pub reps: usize,
    pub seed: u64,
    pub statistics: Vec<Statistic>,
    pub n: usize,
    pub ambient_dim: usize,
    /// Top dimension fitted by the tests.
    pub d: usize,
    pub gof: GofOptions,
}

impl SweepSpec {
    /// Bundled grid and default sizes for `model`.
    pub fn for_model(model: GeometricModel, statistics: Vec<Statistic>, seed: u64) -> Self {
        Self {
            model,
            grid: default_grid(model),
            reps: DEFAULT_REPS,
            seed,
            statistics,
            n: model.default_n(),
            ambient_dim: model.default_ambient_dim(),
            d: model.default_fit_dim(),
            gof: GofOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps1: f64,
    pub eps2: f64,
    pub statistic: Statistic,
    pub passes: usize,
    pub inconclusive: usize,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub model: GeometricModel,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps1,eps2,statistic,passes,inconclusive,reps,seed\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.eps1,
                r.eps2,
                r.statistic.name(),
                r.passes,
                r.inconclusive,
                r.reps,
                r.seed
            ));
        }
        out
    }

    /// Fraction of all replicate tests that were inconclusive.
    pub fn inconclusive_fraction(&self) -> f64 {
        let total: usize = self.rows.iter().map(|r| r.reps).sum();
        let bad: usize = self.rows.iter().map(|r| r.inconclusive).sum();
        if total == 0 {
            0.0
        } else {
            bad as f64 / total as f64
        }
    }

    pub fn row(&self, eps1: f64, eps2: f64, statistic: Statistic) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.eps1 == eps1 && r.eps2 == eps2 && r.statistic == statistic)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Pass,
    Reject,
    Inconclusive,
}

pub fn run_sweep(spec: &SweepSpec, threads: Option<usize>) -> Result<SweepTable> {
    if spec.reps == 0 || spec.statistics.is_empty() {
        return Err(Error::Config("a sweep needs reps >= 1 and at least one statistic".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..spec.grid.len()).flat_map(|g| (0..spec.reps).map(move |r| (g, r))).collect();
    let outcomes: Vec<Vec<Outcome>> = with_threads(threads, || {
        jobs.par_iter()
            .map(|&(g, r)| {
                let pt = spec.grid[g];
                let kernel = spec.model.kernel(pt.eps1, pt.eps2, spec.n)?;
                let seed = Seed::new(Seed::derive_master(spec.seed, g as u64), r as u64);
                let (_, k) = sample_soft_geometric(spec.n, spec.ambient_dim, &kernel, seed)?;
                spec.statistics
                    .iter()
                    .map(|&s| {
                        let res = gof(s, &k, spec.d, &spec.gof)?;
                        Ok(if res.inconclusive {
                            Outcome::Inconclusive
                        } else if res.reject {
                            Outcome::Reject
                        } else {
                            Outcome::Pass
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut rows = Vec::new();
    for (g, pt) in spec.grid.iter().enumerate() {
        let block = &outcomes[g * spec.reps..(g + 1) * spec.reps];
        for (si, &statistic) in spec.statistics.iter().enumerate() {
            let count = |o: Outcome| block.iter().filter(|v| v[si] == o).count();
            rows.push(SweepRow {
                eps1: pt.eps1,
                eps2: pt.eps2,
                statistic,
                passes: count(Outcome::Pass),
                inconclusive: count(Outcome::Inconclusive),
                reps: spec.reps,
                seed: spec.seed,
            });
        }
    }
    Ok(SweepTable { model: spec.model, rows })
}

/// A closed-form quantity checked against simulation from `X(n, p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerificationTarget {
    CriticalMean {
        n: usize,
        p: Vec<f64>,
        k: usize,
    },
    CriticalVariance {
        n: usize,
        p: Vec<f64>,
        k: usize,
    },
    /// Kolmogorov-Smirnov distance of the count standardized by its exact
    /// mean and variance to the standard normal.
    CriticalNormality {
        n: usize,
        p: Vec<f64>,
        k: usize,
    },
    /// Limiting correlation of `T_{k'+i+1}` and `T_{k'+j+1}`.
    CriticalCorrelation {
        n: usize,
        p: Vec<f64>,
        i: usize,
        j: usize,
    },
    MleMean {
        n: usize,
        p: Vec<f64>,
        i: usize,
    },
    /// Kolmogorov-Smirnov distance of the scaled MLE error to its normal limit.
    MleNormality {
        n: usize,
        p: Vec<f64>,
        i: usize,
    },
    /// Pattern given by its facets on `[m]`.
    SubcomplexMean {
        n: usize,
        p: Vec<f64>,
        m: usize,
        pattern: Vec<Vec<u32>>,
    },
    SubcomplexVariance {
        n: usize,
        p: Vec<f64>,
        m: usize,
        pattern: Vec<Vec<u32>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationEntry {
    pub target: VerificationTarget,
    /// Closed-form value (0 for the normality checks).
    pub formula: f64,
    /// Monte-Carlo estimate of the same quantity (the KS distance for the
    /// normality checks).
    pub estimate: f64,
    pub stderr: f64,
    /// `(estimate - formula) / stderr`; 0 for the normality checks.
    pub z: f64,
    pub reps: usize,
}

impl VerificationEntry {
    fn new(target: VerificationTarget, formula: f64, estimate: f64, stderr: f64, reps: usize) -> Self {
        let z = if stderr > 0.0 { (estimate - formula) / stderr } else { 0.0 };
        Self { target, formula, estimate, stderr, z, reps }
    }
}

pub fn verify_target(target: &VerificationTarget, reps: usize, seed: u64) -> Result<VerificationEntry> {
    if reps < 4 {
        return Err(Error::Config("verification needs at least 4 replicates".into()));
    }
    let t = target.clone();
    match target {
        VerificationTarget::CriticalMean { n, p, k } => {
            let params = ModelParams::new(*n, p.clone())?;
            let f = critical_mean_exact(&params, *k)?;
            let x = replicate(reps, seed, |s| {
                critical_counts(&sample_multiparameter(&params, s), k + 1).size(k + 1) as f64
            });
            Ok(VerificationEntry::new(t, f, stats::mean(&x), stats::mean_stderr(&x), reps))
        }
        VerificationTarget::CriticalVariance { n, p, k } => {
            let params = ModelParams::new(*n, p.clone())?;
            let f = critical_variance_exact(&params, *k)?.total;
            let x = replicate(reps, seed, |s| {
                critical_counts(&sample_multiparameter(&params, s), k + 1).size(k + 1) as f64
            });
            Ok(VerificationEntry::new(t, f, stats::variance(&x), stats::variance_stderr(&x), reps))
        }
        VerificationTarget::CriticalNormality { n, p, k } => {
            let params = ModelParams::new(*n, p.clone())?;
            let mean = critical_mean_exact(&params, *k)?;
            let sd = critical_variance_exact(&params, *k)?.total.sqrt();
            if sd.is_nan() || sd <= 0.0 {
                return Err(Error::Numerical(format!("critical count with {} vertices is degenerate", k + 1)));
            }
            let z = replicate(reps, seed, |s| {
                (critical_counts(&sample_multiparameter(&params, s), k + 1).size(k + 1) as f64 - mean) / sd
            });
            let ks = stats::ks_normal(&z, 1.0);
            Ok(VerificationEntry { target: t, formula: 0.0, estimate: ks, stderr: 0.0, z: 0.0, reps })
        }
        VerificationTarget::CriticalCorrelation { n, p, i, j } => {
            let params = ModelParams::new(*n, p.clone())?;
            let f = limiting_covariance(&params, *i, *j)?;
            let (a, b) = (params.k_prime() + i + 1, params.k_prime() + j + 1);
            let pairs = replicate(reps, seed, |s| {
                let c = critical_counts(&sample_multiparameter(&params, s), a.max(b));
                (c.size(a) as f64, c.size(b) as f64)
            });
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let r = stats::correlation(&x, &y);
            Ok(VerificationEntry::new(t, f, r, (1.0 - r * r) / ((reps as f64) - 3.0).sqrt(), reps))
        }
        VerificationTarget::MleMean { n, p, i } => {
            let params = ModelParams::new(*n, p.clone())?;
            if *i == 0 || *i > params.d() {
                return Err(Error::OutOfRange(format!("MLE index {i} outside 1..={}", params.d())));
            }
            let x = replicate(reps, seed, |s| mle_fit(&sample_multiparameter(&params, s), *i).p_hat[i - 1]);
            Ok(VerificationEntry::new(t, params.p(*i), stats::mean(&x), stats::mean_stderr(&x), reps))
        }
        VerificationTarget::MleNormality { n, p, i } => {
            let params = ModelParams::new(*n, p.clone())?;
            let (scale, limit_var) = mle_scaling(&params, *i)?;
            let pi = params.p(*i);
            let x =
                replicate(reps, seed, |s| scale * (mle_fit(&sample_multiparameter(&params, s), *i).p_hat[i - 1] - pi));
            let ks = stats::ks_normal(&x, limit_var.sqrt());
            Ok(VerificationEntry { target: t, formula: 0.0, estimate: ks, stderr: 0.0, z: 0.0, reps })
        }
        VerificationTarget::SubcomplexMean { n, p, m, pattern }
        | VerificationTarget::SubcomplexVariance { n, p, m, pattern } => {
            let params = ModelParams::new(*n, p.clone())?;
            let l = PatternComplex::from_facets(*m, pattern)?;
            let x = replicate(reps, seed, |s| count_subcomplexes(&sample_multiparameter(&params, s), &l) as f64);
            if matches!(target, VerificationTarget::SubcomplexMean { .. }) {
                Ok(VerificationEntry::new(
                    t,
                    expected_count(&l, &params),
                    stats::mean(&x),
                    stats::mean_stderr(&x),
                    reps,
                ))
            } else {
                let f = exact_covariance(&l, &l, &params)?;
                Ok(VerificationEntry::new(t, f, stats::variance(&x), stats::variance_stderr(&x), reps))
            }
        }
    }
}

/// Runs every target with its own derived master seed.
pub fn run_verification(
    targets: &[VerificationTarget],
    reps: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<VerificationEntry>> {
    with_threads(threads, || {
        targets.iter().enumerate().map(|(i, t)| verify_target(t, reps, Seed::derive_master(seed, i as u64))).collect()
    })?
}
