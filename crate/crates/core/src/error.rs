use std::path::PathBuf;

/// Error type shared across the toolkit.
///
/// Variants map onto the CLI exit codes: configuration/parameter/strategy
/// problems exit 1, input data problems exit 2, oracle-infeasible models
/// exit 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("strategy error: {0}")]
    Strategy(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("data error in {path} line {line}: {message}")]
    DataLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("oracle infeasible: {0}")]
    OracleInfeasible(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parameter(_) | Error::Strategy(_) => 1,
            Error::Data(_) | Error::DataLine { .. } | Error::Io(_) => 2,
            Error::OracleInfeasible(_) => 3,
        }
    }
}
