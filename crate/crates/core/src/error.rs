use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown identifier `{name}` at line {line}, column {column}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("arity mismatch: {0}")]
    Arity(String),
    #[error("domain error in component {component}: {message}")]
    Domain { component: usize, message: String },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("point is not in the constraint cone (coordinate {index} = {value})")]
    NotInCone { index: usize, value: f64 },
    #[error("tangency violated at component {component}: upper bound {upper} < 0 on an active coordinate")]
    Tangency { component: usize, upper: f64 },
    #[error("coverage failure: point {index} is not covered by any bump support")]
    Coverage { index: usize },
    #[error("coincidence detected at boundary sample {index} (margin {margin:e})")]
    Coincidence { index: usize, margin: f64 },
    #[error("boundary zero: {0}")]
    BoundaryZero(String),
    #[error("irregular zero at {point:?} (|det| = {det:e})")]
    IrregularZero { point: Vec<f64>, det: f64 },
    #[error("eigensolve failure: {0}")]
    Eigen(String),
    #[error("numerical breakdown: {0}")]
    Breakdown(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
