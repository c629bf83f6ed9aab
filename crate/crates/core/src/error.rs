use thiserror::Error;

/// Errors raised by model construction, linear algebra, and the measures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EsuError {
    #[error("matrix is not Hermitian: max |H - H^dagger| = {deviation:e} exceeds {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized: norm = {norm}")]
    NotNormalized { norm: f64 },

    #[error("invalid spin count {n}: {reason}")]
    InvalidSpinCount { n: usize, reason: &'static str },

    #[error("block size {block} out of range for {n} spins")]
    BlockOutOfRange { block: usize, n: usize },

    #[error("site {site} out of range for a chain of {n} spins")]
    SiteOutOfRange { site: usize, n: usize },

    #[error("sites must be distinct, got {0} twice")]
    RepeatedSite(usize),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("relative fluctuation undefined: |E| = {energy:e} is below {threshold:e}")]
    DegenerateNormalization { energy: f64, threshold: f64 },

    #[error("time grid point {t} lies outside the control window [{start}, 0]")]
    GridOutsideWindow { t: f64, start: f64 },

    #[error("time step {dt} does not resolve noise segments of length {segment}")]
    NoiseUnderResolved { dt: f64, segment: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, EsuError>;
