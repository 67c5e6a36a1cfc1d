use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("unsupported smoothness: floor(alpha) = {0} (supported: 1, 2, 3)")]
    UnsupportedSmoothness(u32),

    #[error("difference set contains a zero row at index {0}")]
    ZeroRow(usize),

    #[error("projection integer overflowed 127 bits")]
    ProjectionOverflow,

    #[error("fiber Gram matrix is numerically singular (fiber {fiber}, size {size})")]
    SingularGram { fiber: usize, size: usize },

    #[error("shift set failed verification: ratio {achieved} exceeds {threshold}")]
    Verification { achieved: f64, threshold: f64 },

    #[error("index set is not sign-symmetric: missing {0:?}")]
    AsymmetricSupport(Vec<i32>),

    #[error("coefficient mapping left an imaginary residue {0:e}")]
    ImaginaryResidue(f64),

    #[error("reference norm {0:e} too small for a relative error")]
    DegenerateNorm(f64),

    #[error("coordinate {0} outside [0, 1]")]
    OutOfRange(f64),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
