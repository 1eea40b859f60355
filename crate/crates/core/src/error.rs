use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("undeclared generator `{0}`")]
    UndeclaredGenerator(String),

    #[error("relator {index} is not freely reduced: `{text}`")]
    UnreducedRelator { index: usize, text: String },

    #[error("backend images violate relator {index} (`{text}`)")]
    BackendRelatorViolation { index: usize, text: String },

    #[error("backend configuration: {0}")]
    Backend(String),

    #[error("ball enumeration exceeded the cap of {cap} elements")]
    BallBudgetExceeded { cap: usize },

    #[error("radius too small: {what} (minimal sufficient half radius: {minimal:?})")]
    RadiusTooSmall { what: String, minimal: Option<usize> },

    #[error("group ring elements live in different balls")]
    BallMismatch,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("not a chain complex: {0}")]
    NotAComplex(String),

    #[error("degree {degree} is not available: {reason}")]
    TruncatedDegree { degree: usize, reason: String },

    #[error("support basis cannot represent target element {0}")]
    IncompleteSupport(String),

    #[error("exact repair failed: {0}")]
    RepairSingular(String),

    #[error("no certificate found at half radius {half_radius}: {detail}")]
    PsdFailedAfterRetries { half_radius: usize, detail: String },

    #[error("complex fingerprint mismatch (certificate {expected}, complex {found})")]
    FingerprintMismatch { expected: String, found: String },

    #[error("Laplacian convention mismatch (certificate `{expected}`, verifier `{found}`)")]
    ConventionMismatch { expected: String, found: String },

    #[error("bar complex too large: {needed} > cap {cap}")]
    CapExceeded { needed: usize, cap: usize },

    #[error("module is not unitary: {0}")]
    NotUnitary(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("solver did not converge: {0}")]
    NotConverged(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}
