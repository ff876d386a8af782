use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} is outside the vertex set [1, {n}]")]
    VertexOutOfRange { vertex: u32, n: usize },
    #[error("empty simplex or facet")]
    EmptySimplex,
    #[error("simplex {0} is not in the complex")]
    NotInComplex(String),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error("invalid matching: {0}")]
    InvalidMatching(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
