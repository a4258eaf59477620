use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("variable index {var} out of range for {num_variables} variables")]
    VariableOutOfRange { var: usize, num_variables: usize },

    #[error("clause {clause} repeats variable {var}")]
    DuplicateVariable { clause: usize, var: usize },

    #[error("clause {clause} duplicates an earlier clause")]
    DuplicateClause { clause: usize },

    #[error("clause {clause} is empty")]
    EmptyClause { clause: usize },

    #[error("cannot generate {requested} distinct clauses: only {available} exist")]
    InfeasibleGeneration { requested: u128, available: u128 },

    #[error("DIMACS line {line}: {message}")]
    Dimacs { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn dimacs(line: usize, message: impl Into<String>) -> Self {
        Error::Dimacs {
            line,
            message: message.into(),
        }
    }
}
