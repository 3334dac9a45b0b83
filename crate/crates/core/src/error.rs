use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical kernels and the pencil analysis built on them.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("QR iteration stalled at index {index} after {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },

    #[error("matrix is singular to working precision (pivot {index}, |pivot| = {pivot:e})")]
    Singular { index: usize, pivot: f64 },

    #[error("column {column} is numerically dependent on earlier columns (|r_jj| = {value:e})")]
    RankDeficient { column: usize, value: f64 },

    #[error("non-positive pivot at index {index} (value {value:e}); matrix is not positive definite")]
    NotPositiveDefinite { index: usize, value: f64 },

    #[error("matrix is not Hermitian (||H - H*||_F = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("matrix exponential overflows (||M||_1 = {norm:e})")]
    Overflow { norm: f64 },

    #[error("A - mu*E is singular or ill-conditioned at mu = {mu} (condition estimate {condition:e})")]
    SingularShift { mu: Complex64, condition: f64 },

    #[error("pencil appears singular or badly scaled; condition estimates per shift: {0}")]
    SingularPencil(String),

    #[error("invalid zero-block size: {0}")]
    BadZeroCount(String),

    #[error("initial condition is inconsistent with the algebraic constraints (residual {residual:e})")]
    Inconsistent { residual: f64, projected: Vec<Complex64> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Ruhe's definition requires an invertible E; use the DAE kind instead")]
    SingularE,

    #[error("subspace contains a zero Ritz value (index {index}); it leaked into the infinite-eigenvalue part")]
    ZeroRitzValue { index: usize },

    #[error("saddle-point generator failed: {0}")]
    Generator(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    /// Stable snake_case name of the variant, used in error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::NonFinite { .. } => "non_finite",
            Error::NoConvergence { .. } => "no_convergence",
            Error::Singular { .. } => "singular",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::Overflow { .. } => "overflow",
            Error::SingularShift { .. } => "singular_shift",
            Error::SingularPencil(_) => "singular_pencil",
            Error::BadZeroCount(_) => "bad_zero_count",
            Error::Inconsistent { .. } => "inconsistent",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::SingularE => "singular_e",
            Error::ZeroRitzValue { .. } => "zero_ritz_value",
            Error::Generator(_) => "generator",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }

    /// Errors caused by malformed user input rather than numerical breakdown.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_)
                | Error::NonFinite { .. }
                | Error::InvalidArgument(_)
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::BadZeroCount(_)
                | Error::NotHermitian { .. }
                | Error::NotPositiveDefinite { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
