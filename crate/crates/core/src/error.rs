use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("schema: {0}")]
    Schema(String),

    #[error("row {row}, column `{column}`: cannot parse {value:?}")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("{0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("class `{0}` has no samples")]
    EmptyClass(String),

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },

    #[error("{0}")]
    Metric(String),

    #[error("model format: {0}")]
    Format(String),

    #[error("node `{node}`: {source}")]
    Node {
        node: String,
        #[source]
        source: Box<Error>,
    },

    #[error("no input files")]
    NoInput,

    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_node(self, node: &str) -> Self {
        Error::Node {
            node: node.to_string(),
            source: Box::new(self),
        }
    }

    /// Short machine-readable category, used as the CLI error prefix and by the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::MissingColumn(_) | Error::Schema(_) => "schema",
            Error::Parse { .. } => "parse",
            Error::Config(_) | Error::NoInput => "config",
            Error::Dimension { .. } => "dimension",
            Error::EmptyClass(_) => "data",
            Error::Diverged { .. } => "training",
            Error::Metric(_) => "metric",
            Error::Format(_) => "format",
            Error::Usage(_) => "usage",
            Error::Node { source, .. } => source.kind(),
        }
    }
}
