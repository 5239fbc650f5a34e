use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not hermitian: max |M - M^dagger| = {max_asymmetry:e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("matrix is not unitary: max |V^dagger V - I| = {residual:e}")]
    NotUnitary { residual: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("grid index {index} has no {needed} neighbour on a grid of {len} points")]
    Boundary {
        index: usize,
        len: usize,
        needed: &'static str,
    },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("input vector is not normalized: norm = {norm}")]
    NotNormalized { norm: f64 },

    #[error("empty spectrum: every weight is zero")]
    EmptySpectrum,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dense dimension {dim} exceeds the configured limit {limit}; reduce the bond dimension or system size")]
    DimensionLimit { dim: usize, limit: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
