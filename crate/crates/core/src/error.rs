use std::path::PathBuf;

/// Errors produced by the solver, its diagnostics and its file formats.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error in {what}: {value} is outside the admissible range")]
    Domain { what: &'static str, value: f64 },

    #[error("cosh^2 overflow guard exceeded: |g| = {g} > {limit}")]
    Overflow { g: f64, limit: f64 },

    #[error("separation lost at t = {t}: max |g| = {max_abs_g:.6e}")]
    SeparationLoss { t: f64, max_abs_g: f64 },

    #[error("non-finite value in field at t = {t}")]
    NonFinite { t: f64 },

    #[error(
        "separation violation: max |u| = {max_abs_u} is at or above 1 - 1e-8; \
         the logarithmic potential cannot be evaluated here, use the g formulation"
    )]
    SeparationViolation { max_abs_u: f64 },

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: usize, right: usize },

    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("snapshot format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Qualifies the field of an [`Error::Invalid`] with its table name.
    pub(crate) fn prefixed(self, table: &str) -> Self {
        match self {
            Error::Invalid { field, reason } => Error::Invalid {
                field: format!("{table}.{field}"),
                reason,
            },
            other => other,
        }
    }

    /// True for failures of the numerics (loss of separation, overflow, NaN).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Overflow { .. }
                | Error::SeparationLoss { .. }
                | Error::NonFinite { .. }
                | Error::SeparationViolation { .. }
        )
    }

    /// Short machine-readable category used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } | Error::Invalid { .. } | Error::Parse(_) => "validation",
            Error::GridMismatch { .. } => "validation",
            Error::Overflow { .. }
            | Error::SeparationLoss { .. }
            | Error::NonFinite { .. }
            | Error::SeparationViolation { .. } => "numerical",
            Error::Format { .. } | Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
