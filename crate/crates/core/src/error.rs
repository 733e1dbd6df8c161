use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid alignment: {what} = {ratio} is not a positive integer")]
    Misaligned { what: &'static str, ratio: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value produced at step {step}")]
    NonFinite { step: usize },

    #[error("density does not decay below {epsilon0} within |v| <= {cap}")]
    NoDecay { epsilon0: f64, cap: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("node budget exceeded: {nodes} nodes > budget {budget}")]
    Budget { nodes: usize, budget: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite { .. } => 3,
            _ => 2,
        }
    }
}
