use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coordinate index {index} out of range (m = {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("coordinate {index} is opaque and cannot be lifted")]
    OpaqueLift { index: usize },

    #[error("jet dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("jet coordinate count {requested} exceeds the cap of {cap}")]
    TooManyCoordinates { requested: usize, cap: usize },

    #[error("coordinate {index} value {value} lies outside the support of {kind}")]
    OutOfSupport {
        index: usize,
        value: f64,
        kind: &'static str,
    },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("derivative check failed for {name} at {point}: supplied {supplied}, finite difference {estimated}")]
    DerivativeMismatch {
        name: &'static str,
        point: f64,
        supplied: f64,
        estimated: f64,
    },

    #[error("no usable samples")]
    NoUsableSamples,

    #[error("unsupported coordinate kind for quadrature: {0}")]
    UnsupportedQuadrature(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown {what} '{name}'; valid names: {valid}")]
    UnknownName {
        what: &'static str,
        name: String,
        valid: String,
    },

    #[error("degenerate scenario: {0}")]
    Degenerate(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
