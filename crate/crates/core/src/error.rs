use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates a documented constraint.
    #[error("{module}: invalid {field}: {reason}")]
    Config {
        module: &'static str,
        field: String,
        reason: String,
    },

    /// An argument lies outside the domain of a function.
    #[error("{module}: {reason}")]
    Domain { module: &'static str, reason: String },

    /// Array lengths or index sets do not match.
    #[error("{module}: shape mismatch: expected {expected}, got {got}")]
    Shape {
        module: &'static str,
        expected: String,
        got: String,
    },

    #[error("{module}: numeric failure: {reason}")]
    Numeric { module: &'static str, reason: String },

    #[error("{module}: {reason}")]
    Usage { module: &'static str, reason: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(module: &'static str, field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            module,
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(module: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            module,
            reason: reason.into(),
        }
    }

    pub(crate) fn shape(module: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::Shape {
            module,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub(crate) fn numeric(module: &'static str, reason: impl Into<String>) -> Self {
        Error::Numeric {
            module,
            reason: reason.into(),
        }
    }

    pub(crate) fn usage(module: &'static str, reason: impl Into<String>) -> Self {
        Error::Usage {
            module,
            reason: reason.into(),
        }
    }

    /// Machine-readable `module.kind` code, e.g. `prior.config`.
    pub fn code(&self) -> String {
        match self {
            Error::Config { module, .. } => format!("{module}.config"),
            Error::Domain { module, .. } => format!("{module}.domain"),
            Error::Shape { module, .. } => format!("{module}.shape"),
            Error::Numeric { module, .. } => format!("{module}.numeric"),
            Error::Usage { module, .. } => format!("{module}.usage"),
            Error::Io(_) => "io.error".to_string(),
            Error::Csv(_) => "io.csv".to_string(),
            Error::Json(_) => "io.json".to_string(),
        }
    }
}
