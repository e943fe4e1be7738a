use thiserror::Error;

/// Errors surfaced by the library.
///
/// Variants are grouped so callers (notably the CLI) can map them onto
/// coarse failure classes: configuration problems, bad input data, and
/// numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("zero-norm vector where a direction is required")]
    ZeroNorm,

    #[error("non-finite value encountered: {context}")]
    NonFinite { context: String },

    #[error("empty input: {context}")]
    Empty { context: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("constant sequence: rank correlation is undefined")]
    ConstantSequence,

    #[error("covariance modes differ: {context}")]
    ModeMismatch { context: String },

    #[error("negative diagonal entry {value} at index {index}")]
    NegativeDiagonal { index: usize, value: f64 },

    #[error("sqrt-of-covariance distance is only defined for diagonal covariances")]
    SqrtCovUnsupported,

    #[error("Cholesky factorization failed even after ridge regularization")]
    CholeskyFailed,

    #[error("class {class} has no statistics")]
    MissingClassStats { class: u32 },

    #[error("invalid parameter: {context}")]
    InvalidParameter { context: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("bad file format in {path}: {reason}")]
    Format { path: String, reason: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("need at least {required} classes, got {actual}")]
    TooFewClasses { required: usize, actual: usize },

    #[error("K = {k} must be smaller than the gallery size {gallery}")]
    KTooLarge { k: usize, gallery: usize },

    #[error("non-finite loss at epoch {epoch}, batch {batch}; diagnostics: {diagnostics}")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        diagnostics: String,
    },
}

/// Coarse failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Invalid configuration or parameters.
    Config,
    /// Missing, malformed, or inconsistent input data.
    Data,
    /// Numerical failure (divergence, factorization failure).
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            InvalidParameter { .. } | TooFewClasses { .. } | KTooLarge { .. }
            | SqrtCovUnsupported => ErrorClass::Config,
            CholeskyFailed | NonFiniteLoss { .. } | ConstantSequence => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
