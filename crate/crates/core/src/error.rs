use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("numerical abort in {stage} at step {step} (t = {time:.6e}): {msg}")]
    Numerical {
        stage: &'static str,
        step: usize,
        time: f64,
        msg: String,
    },

    #[error("mesh mismatch: {0}")]
    Mismatch(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn numerical(stage: &'static str, step: usize, time: f64, msg: impl Into<String>) -> Self {
        Error::Numerical {
            stage,
            step,
            time,
            msg: msg.into(),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
