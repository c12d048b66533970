use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dilatation sup-norm {0} is not below 1")]
    NotUniformlyElliptic(f64),

    #[error("field has no Hölder metadata")]
    NoHolderMetadata,

    #[error("image annuli are not separated (R1 = {r1_max} >= rho2 = {rho2})")]
    NotSeparated { r1_max: f64, rho2: f64 },

    #[error("every annulus was skipped; nothing certified")]
    NothingCertified,

    #[error("inverse of f_c is ambiguous at w = {0}")]
    AmbiguousInverse(num_complex::Complex64),

    #[error("Neumann iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("support does not fit inside the padded grid: {0}")]
    SupportTooLarge(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
