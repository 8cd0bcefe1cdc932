use thiserror::Error;

/// Errors raised while constructing or transforming channels, states and measurements.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: ||M - M^dagger||_F = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semi-definite: eigenvalue {eigenvalue:.3e}")]
    NotPsd { eigenvalue: f64 },

    #[error("density matrix trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },

    #[error("dimension mismatch: {context} (expected {expected}, found {found})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("channel has no Kraus operators")]
    EmptyChannel,

    #[error("channel is not trace-preserving: ||sum A_i^dagger A_i - I||_F = {residual:.3e}")]
    NotTracePreserving { residual: f64 },

    #[error("channel must be square (d_in = d_out) here, found {d_in} -> {d_out}")]
    NonSquareChannel { d_in: usize, d_out: usize },

    #[error("matrix is not unitary: ||U^dagger U - I||_F = {residual:.3e}")]
    NotUnitary { residual: f64 },

    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("ensemble has no members")]
    EmptyEnsemble,

    #[error("labels are not orthonormal: ||L^dagger L - I||_F = {residual:.3e}")]
    LabelsNotOrthonormal { residual: f64 },

    #[error("output state A(rho) is numerically zero")]
    ZeroOutput,

    #[error("oracle size {size} exceeds the cap of {cap} amplitudes")]
    OracleTooLarge { size: usize, cap: usize },

    #[error("code of dimension {code_dim} with {n_isometries} isometries does not fit in dimension {dim}")]
    CodeTooLarge {
        dim: usize,
        code_dim: usize,
        n_isometries: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed instance: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
