use thiserror::Error;

/// Errors raised anywhere in the library. Variant names carry the module
/// the failure originated in.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qmatrix: dimension mismatch: {0}")]
    Dimension(String),
    #[error("qmatrix: matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("qmatrix: matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },
    #[error("qmatrix: trace {trace} differs from 1")]
    Trace { trace: f64 },
    #[error("qmatrix: eigendecomposition did not converge")]
    NoConvergence,
    #[error("{module}: invalid argument: {msg}")]
    InvalidArgument { module: &'static str, msg: String },
    #[error("{module}: precondition violated: {msg}")]
    Precondition { module: &'static str, msg: String },
    #[error("circuits: enumeration cap {cap} exceeded ({reached} elements reached)")]
    CapExceeded { cap: usize, reached: usize },
    #[error("circuits: family cache rejected: {0}")]
    Cache(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(module: &'static str, msg: impl Into<String>) -> Error {
    Error::InvalidArgument { module, msg: msg.into() }
}

pub(crate) fn precondition(module: &'static str, msg: impl Into<String>) -> Error {
    Error::Precondition { module, msg: msg.into() }
}
