use thiserror::Error;

/// Errors produced by the entropy toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("state not invertible: smallest eigenvalue {0:.3e} is below the rank floor")]
    NotInvertible(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("matrix is not symmetric (max deviation {0:.3e})")]
    NotSymmetric(f64),

    #[error("Renyi index must be a positive integer, got {0}")]
    InvalidIndex(u32),

    #[error("trace power is not positive ({0:.3e}); numerical breakdown")]
    NumericalBreakdown(f64),

    #[error("invalid intervals: {0}")]
    InvalidIntervals(String),

    #[error("points closer than {min_gap:.1e}: {a} and {b}")]
    CoincidentPoints { a: f64, b: f64, min_gap: f64 },

    #[error("charge configuration is not neutral (total charge {0:.3e})")]
    NotNeutral(f64),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
