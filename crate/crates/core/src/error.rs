use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KmsError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("matrix is not Hermitian: {0}")]
    NotHermitian(String),

    #[error("operator is not positive: {0}")]
    NotPositive(String),

    #[error("singular density: {0}")]
    Singular(String),

    #[error("positive energy violated: every eigenvalue of every generator slot must be > 0 ({0})")]
    PositiveEnergy(String),

    #[error("trace is not subinvariant: {0}")]
    NotSubinvariant(String),

    #[error("module is not full: {0}")]
    NotFull(String),

    #[error("not a KMS functional: residual {0:e}")]
    NotKms(f64),

    #[error("spectral-radius precondition violated: r(Z) = {0} is not < 1")]
    SpectralRadius(f64),

    #[error("resource guard: {0}")]
    Resource(String),

    #[error("incompatible quasi-free data: {0}")]
    Incompatible(String),
}

pub type Result<T> = std::result::Result<T, KmsError>;
