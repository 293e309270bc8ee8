use thiserror::Error;

/// Errors raised by the solvers and the report pipeline.
///
/// Variants are grouped by how a caller is expected to react: domain and
/// pole errors mean an argument left the admissible region of a formula,
/// configuration and usage errors mean the inputs were malformed, and
/// diagnostics mean a numerical assumption failed at run time.
#[derive(Debug, Error)]
pub enum AlbedoError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole at s = {s}: {what}")]
    Pole { s: f64, what: &'static str },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("solver diagnostic: {message} (omega = {omega}, N = {nodes})")]
    Diagnostic {
        message: String,
        omega: f64,
        nodes: usize,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl AlbedoError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        AlbedoError::Domain(msg.into())
    }

    pub(crate) fn diagnostic(msg: impl Into<String>, omega: f64, nodes: usize) -> Self {
        AlbedoError::Diagnostic {
            message: msg.into(),
            omega,
            nodes,
        }
    }

    /// Process exit code for this error class: 2 solver diagnostic,
    /// 3 usage/config, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            AlbedoError::Diagnostic { .. } => 2,
            AlbedoError::Domain(_)
            | AlbedoError::Pole { .. }
            | AlbedoError::Config(_)
            | AlbedoError::Usage(_)
            | AlbedoError::Serde(_) => 3,
            AlbedoError::Io { .. } => 4,
        }
    }

    /// Short machine-readable tag used in the CLI error block.
    pub fn kind(&self) -> &'static str {
        match self {
            AlbedoError::Domain(_) => "domain",
            AlbedoError::Pole { .. } => "pole",
            AlbedoError::Config(_) => "config",
            AlbedoError::Usage(_) => "usage",
            AlbedoError::Diagnostic { .. } => "diagnostic",
            AlbedoError::Io { .. } => "io",
            AlbedoError::Serde(_) => "serialization",
        }
    }
}

pub type Result<T> = std::result::Result<T, AlbedoError>;
