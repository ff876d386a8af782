//! Random simplicial complexes in the multi-parameter `X(n, p)` model,
//! lexicographic discrete Morse matchings, and goodness-of-fit tests built
//! on critical-simplex counts.

pub mod bitset;
pub mod complex;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod io;
pub mod models;
pub mod moments;
pub mod morse;
pub mod stats;
pub mod subcomplex;

pub use complex::{Simplex, SimplicialComplex, SkeletonCounts, VertexId};
pub use error::{Error, Result};
pub use models::{ModelParams, Seed};
