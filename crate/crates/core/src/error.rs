use thiserror::Error;

/// Errors produced by the simulator, the circuit builders and the qPCA pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpcaError {
    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    IndexOutOfRange { index: usize, num_qubits: usize },

    #[error("gate matrix is not unitary (max |M†M - I| = {deviation:e})")]
    NonUnitary { deviation: f64 },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("{num_qubits} qubits exceeds the simulator limit of {max}")]
    TooManyQubits { num_qubits: usize, max: usize },

    #[error("measurement outcome has probability {probability:e}, cannot post-select")]
    ZeroProbabilityOutcome { probability: f64 },

    #[error("cannot encode a zero vector")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {asymmetry:e}")]
    NotSymmetric {
        row: usize,
        col: usize,
        asymmetry: f64,
    },

    #[error("reciprocal of a zero eigenvalue requested")]
    ZeroEigenvalue,

    #[error("all components filtered: no eigenvalue exceeds tau = {tau}")]
    AllComponentsFiltered { tau: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, QpcaError>;
