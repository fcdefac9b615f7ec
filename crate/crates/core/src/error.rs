use thiserror::Error;

/// Errors raised across the library. Each variant maps onto one of the CLI
/// exit codes via [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("input shape: {0}")]
    InputShape(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("embedding invalid: {0}")]
    EmbeddingInvalid(String),

    #[error("insufficient samples: need at least {needed} columns, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("load error: {0}")]
    Load(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource(_) => 3,
            Error::Invariant(_) | Error::Load(_) => 4,
            _ => 2,
        }
    }

    /// Prefixes the message with `ctx`, keeping the variant and exit code.
    pub fn context(self, ctx: &str) -> Error {
        match self {
            Error::InputShape(m) => Error::InputShape(format!("{ctx}: {m}")),
            Error::Precondition(m) => Error::Precondition(format!("{ctx}: {m}")),
            Error::Parameter(m) => Error::Parameter(format!("{ctx}: {m}")),
            Error::EmbeddingInvalid(m) => Error::EmbeddingInvalid(format!("{ctx}: {m}")),
            Error::Resource(m) => Error::Resource(format!("{ctx}: {m}")),
            Error::Invariant(m) => Error::Invariant(format!("{ctx}: {m}")),
            Error::Load(m) => Error::Load(format!("{ctx}: {m}")),
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            other => other,
        }
    }
}
