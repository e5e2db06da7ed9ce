use thiserror::Error;

/// Errors produced by the frame tuning library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e}, allowed {allowed:.3e})")]
    NotHermitian { asymmetry: f64, allowed: f64 },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("column {column} has zero norm")]
    ZeroColumn { column: usize },

    #[error("column {column} is not unit norm (norm {norm:.17})")]
    NotUnitNorm { column: usize, norm: f64 },

    #[error("real-field frame has a nonzero imaginary part at ({row}, {col})")]
    ImaginaryInRealFrame { row: usize, col: usize },

    #[error("operation requires a complex frame")]
    RealFieldUnsupported,

    #[error("frame operator is rank deficient (smallest eigenvalue {smallest:.3e})")]
    RankDeficient { smallest: f64 },

    #[error("step size {step} outside the admissible interval (0, {limit})")]
    StepOutOfRange { step: f64, limit: f64 },

    #[error("guaranteed decrease violated: potential {after} exceeds bound {bound}")]
    DescentGuarantee { after: f64, bound: f64 },

    #[error("epsilon {epsilon} outside the admissible interval {interval}")]
    EpsilonOutOfRange { epsilon: f64, interval: String },

    #[error("partition bottleneck {bottleneck} is not below epsilon {epsilon}")]
    NotEpsilonPartitionable { bottleneck: f64, epsilon: f64 },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("spectral split degenerate: {0}")]
    DegenerateSplit(String),

    #[error("vector {index} lies outside the subspace (residual {residual:.3e})")]
    OutsideSubspace { index: usize, residual: f64 },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0}")]
    Precondition(String),

    #[error("malformed input, field `{field}`: {message}")]
    Format { field: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
