//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building or applying a model.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows} rows, {cols} columns")]
    NonSquare { rows: usize, cols: usize },

    #[error("negative distance {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("diagonal entry {value} at index {index} exceeds the zero tolerance")]
    NonzeroDiagonal { index: usize, value: f64 },

    #[error("asymmetry {max_abs} at ({row}, {col}) exceeds the repair tolerance {tolerance}")]
    AsymmetryTooLarge {
        row: usize,
        col: usize,
        max_abs: f64,
        tolerance: f64,
    },

    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("matrix at {context} is empty")]
    EmptyMatrix { context: String },

    #[error("row {row} has {got} columns, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("cell ({row}, {col}) is not numeric: {token:?}")]
    NonNumericCell {
        row: usize,
        col: usize,
        token: String,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("neighbor graph is disconnected: component sizes {component_sizes:?}; raise k")]
    DisconnectedGraph { component_sizes: Vec<usize> },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("node has no samples")]
    EmptyNode,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("affinity vector is identically zero")]
    AllZeroAffinity,

    #[error("training set has a single sample; no pairwise distance exists")]
    DegenerateTrainingSet,

    #[error("only {available} positive eigenvalues above threshold, {requested} requested")]
    InsufficientPositiveEigenvalues { available: usize, requested: usize },

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("leaf means not populated; call populate_leaf_means first")]
    LeafMeansMissing,

    #[error("prediction row {row} matches no training response")]
    PredictionNotInTrainingSet { row: usize },

    #[error("model format version {found} unsupported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("bad image dimensions: {0}")]
    BadDimensions(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
