use thiserror::Error;

/// Errors raised by the projection-evolution library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PevError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not square or has the wrong number of entries ({0})")]
    Shape(String),

    #[error("operator contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("operator is not hermitian (max deviation {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("operator is not unitary (max deviation {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("not a valid density operator: {0}")]
    InvalidDensity(String),

    #[error("branch probability {prob:.3e} is below the zero-probability threshold")]
    ZeroProbabilityBranch { prob: f64 },

    #[error("every branch has zero probability at step {tau}")]
    AllBranchesZero { tau: i64 },

    #[error("empty channel family at step {tau}")]
    EmptyFamily { tau: i64 },

    #[error("invalid channel family: {0}")]
    InvalidFamily(String),

    #[error(
        "invalid mass-shell width: Gamma/2 = {half_width} must be below the mean mass {mean_mass}"
    )]
    InvalidWidth { half_width: f64, mean_mass: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid double-slit configuration: {0}")]
    InvalidConfig(String),

    #[error("quadrature did not converge: estimate {estimate:.6e}, error {error:.3e} after {evaluations} evaluations")]
    QuadratureFailure {
        estimate: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("probability grid is degenerate (all values zero)")]
    DegenerateGrid,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for PevError {
    fn from(e: std::io::Error) -> Self {
        PevError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, PevError>;
