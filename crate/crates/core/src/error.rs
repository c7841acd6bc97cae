use thiserror::Error;

/// Errors produced by the barycenter, transport, projection and coreset routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("bad weights: {0}")]
    BadWeights(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("exponent p must be a finite real >= 1, got {0}")]
    BadExponent(f64),

    #[error("bad lambdas: {0}")]
    BadLambdas(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("instance too large for the enumeration oracle ({0} cells)")]
    TooLarge(usize),

    #[error("support update needs positive total weight")]
    ZeroWeight,

    #[error("barycenter atom {0} carries zero weight")]
    ZeroAtomWeight(usize),

    #[error("invalid solution: {}", .0.join("; "))]
    InvalidSolution(Vec<String>),

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("bad magic number: expected {expected:#010x}, found {found:#010x}")]
    BadMagic { expected: u32, found: u32 },

    #[error("truncated file: needed {needed} bytes, found {found}")]
    TruncatedFile { needed: usize, found: usize },

    #[error("count mismatch: {0} points vs {1} labels")]
    CountMismatch(usize, usize),

    #[error("parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },

    #[error("ragged rows: line {line} has dimension {found}, expected {expected}")]
    RaggedRows {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("plan entry {value} at ({dist}, {atom}, {col}) is not a multiple of 1/{denominator}")]
    NotMultipleOfN {
        dist: usize,
        atom: usize,
        col: usize,
        value: f64,
        denominator: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
