//! Error type shared by every module.

use thiserror::Error;

/// Failure modes of the library, grouped into stable categories.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    /// The ratio defining the engineering parameter has a vanishing
    /// denominator; the state behaves like a pure |φ⁺⟩ with α = 180°.
    #[error("degenerate amplitude ratio: |A(d,-d)| = {denominator:e} is below tolerance (alpha = {alpha_deg} deg)")]
    DegenerateRatio { denominator: f64, alpha_deg: f64 },

    #[error("undefined estimate: {0}")]
    UndefinedEstimate(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable category name, printed by the CLI.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Resolution(_) => "resolution",
            Error::DegenerateRatio { .. } => "degenerate",
            Error::UndefinedEstimate(_) => "estimate",
            Error::Shape(_) => "shape",
            Error::Parse { .. } => "parse",
            Error::Numerical(_) => "numerical",
            Error::Io { .. } => "io",
        }
    }

    /// Process exit code associated with the category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Parse { .. } => 3,
            Error::Io { .. } => 4,
            Error::Shape(_) => 5,
            Error::Resolution(_) => 6,
            Error::DegenerateRatio { .. } => 7,
            Error::UndefinedEstimate(_) => 8,
            Error::Numerical(_) => 9,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
