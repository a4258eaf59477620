use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("manifest key `{key}`: {message}")]
    Manifest { key: String, message: String },
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] boltzevo_core::Error),
}

impl CliError {
    /// 1 for usage and configuration problems, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        use boltzevo_core::Error as E;
        match self {
            CliError::Manifest { .. } | CliError::Unreadable { .. } | CliError::Usage(_) => 1,
            CliError::Core(e) => match e {
                E::Io(_) | E::Training(_) | E::Snapshot(_) => 2,
                _ => 1,
            },
        }
    }
}
