use thiserror::Error;

/// Errors raised while building or parsing a graph, or deriving a measure
/// from it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("edge list is empty")]
    EmptyEdgeList,
    #[error("graph needs at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("edge {edge} is a self-loop at vertex {vertex}")]
    SelfLoop { edge: usize, vertex: usize },
    #[error("edge {edge} references vertex {vertex} but n = {n}")]
    VertexOutOfRange { edge: usize, vertex: usize, n: usize },
    #[error("edge {edge} has nonpositive or non-finite conductance {value}")]
    NonPositiveConductance { edge: usize, value: f64 },
    #[error("edge {edge} has conductance {value} outside [1e-12, 1e12]")]
    ConductanceOutOfRange { edge: usize, value: f64 },
    #[error("graph is disconnected: vertex {unreached} is unreachable from vertex 0")]
    Disconnected { unreached: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("edge weight vector is identically zero")]
    ZeroWeightVector,
    #[error("edge weight vector has a non-finite entry")]
    NonFiniteWeight,
    #[error("expected a vector of length {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },
}

/// Errors from the dense linear-algebra layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}×{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: max asymmetry {asymmetry:e}")]
    Asymmetric { asymmetry: f64 },
    #[error("matrix has a negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
    #[error("expected a one-dimensional kernel, found dimension {0}")]
    KernelDimension(usize),
    #[error("injection does not sum to zero (sum = {sum:e})")]
    UnbalancedInjection { sum: f64 },
    #[error("reduced Laplacian is not positive definite")]
    Singular,
    #[error("scaling diagonal must be strictly positive")]
    NonPositiveScaling,
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Errors from the entropy and heat-kernel layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("time must be finite and nonnegative, got {0}")]
    InvalidTime(f64),
    #[error("tolerance must be finite and positive, got {0}")]
    InvalidTolerance(f64),
    #[error("entry {index} is negative ({value})")]
    NegativeEntry { index: usize, value: f64 },
    #[error("entry {index} must be strictly positive, got {value}")]
    NonPositiveEntry { index: usize, value: f64 },
    #[error("probability vector sums to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("logarithmic mean needs positive arguments, got ({a}, {b})")]
    LogMeanDomain { a: f64, b: f64 },
    #[error("expected a vector of length {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("edge {edge} has conductance {value}; unit conductances required")]
    NotUnitConductance { edge: usize, value: f64 },
    #[error(transparent)]
    Generate(#[from] crate::generate::GenerateError),
}
