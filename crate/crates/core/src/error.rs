use thiserror::Error;

/// Errors produced by graph construction and the signal-processing pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GspError {
    #[error("adjacency matrix must be square and non-empty (got {rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("signal is bound to a different graph")]
    GraphMismatch,

    #[error("adjacency matrix is zero; the shift cannot be normalized")]
    ZeroAdjacency,

    #[error("graph is directed or has complex weights: {0}")]
    NotUndirected(String),

    #[error("negative edge weight {weight} on edge {src} -> {dst}")]
    NegativeWeight { src: usize, dst: usize, weight: f64 },

    #[error(
        "matrix is numerically non-diagonalizable (eigenvector basis condition {condition:e})"
    )]
    NearDefective { condition: f64 },

    #[error("eigensolver failed to converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for {len} entries")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("Jordan chain violates (A - λI)v_r = v_(r-1) at r = {r} (residual {residual:e})")]
    InvalidChain { r: usize, residual: f64 },

    #[error("frequencies {first} and {second} are not distinct")]
    RepeatedFrequency { first: usize, second: usize },

    #[error("empty pass band")]
    EmptyBand,

    #[error("need at least {needed} history snapshots, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    #[error("no known labels")]
    NoLabels,

    #[error("label {value} at node {node} is not one of +1, -1, 0")]
    InvalidLabel { node: usize, value: f64 },

    #[error("regularization system is singular: unlabeled component {component:?} is not pinned")]
    SingularSystem { component: Vec<usize> },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("conjugate gradient did not reach tolerance {tolerance:e} in {iterations} iterations")]
    SolverStalled { tolerance: f64, iterations: usize },
}

impl GspError {
    /// True for refusals caused by numerics rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            GspError::NearDefective { .. }
                | GspError::NoConvergence { .. }
                | GspError::SingularSystem { .. }
                | GspError::SolverStalled { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, GspError>;
