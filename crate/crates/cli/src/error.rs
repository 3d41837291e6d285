use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A simulation or integrity check failed.
    #[error("{0}")]
    Check(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    /// The server answered with an error body; printed verbatim.
    #[error("{code}: {message} (HTTP {status})")]
    Api { status: u16, code: String, message: String },
    /// An error frame on the participant channel.
    #[error("{code}: {message}")]
    Channel { code: String, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("transport: {0}")]
    Transport(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Check(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Api { .. } | CliError::Channel { .. } => 3,
            CliError::Io { .. } => 4,
            CliError::Transport(_) => 5,
        })
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<relaylab_core::Error> for CliError {
    fn from(e: relaylab_core::Error) -> Self {
        match e {
            relaylab_core::Error::Io(source) => CliError::Io {
                path: PathBuf::new(),
                source,
            },
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<reqwest::Error> for CliError {
    fn from(e: reqwest::Error) -> Self {
        CliError::Transport(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
