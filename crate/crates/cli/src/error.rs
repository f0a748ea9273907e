use std::io;
use std::path::PathBuf;

use procviz_core::store::StoreError;
use procviz_core::LoadError;
use thiserror::Error;

/// Process exit codes, one per error class.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const IO: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const AUTH: i32 = 3;
    pub const MALFORMED: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error("command not found: {0}")]
    CommandNotFound(String),
    #[error("port {0} is already in use")]
    PortInUse(u16),
    #[error("decryption failed: wrong passcode or the file was modified")]
    Auth,
    #[error("malformed session: {0}")]
    Malformed(String),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// Like [`CliError::io`], but a missing file becomes `FileNotFound`.
    pub fn reading(path: impl Into<PathBuf>, source: io::Error) -> Self {
        let path = path.into();
        if source.kind() == io::ErrorKind::NotFound {
            CliError::FileNotFound(path)
        } else {
            CliError::io(format!("reading {}", path.display()), source)
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::FileNotFound(_)
            | CliError::Io { .. }
            | CliError::CommandNotFound(_)
            | CliError::PortInUse(_) => exit::IO,
            CliError::Auth => exit::AUTH,
            CliError::Malformed(_) => exit::MALFORMED,
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::EmptyPasscode => CliError::Usage(e.to_string()),
            StoreError::WrongPasscodeOrTampered => CliError::Auth,
            StoreError::MalformedContainer(_) => CliError::Malformed(e.to_string()),
        }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Store(s) => s.into(),
            LoadError::PasscodeRequired => CliError::Usage(e.to_string()),
            LoadError::Parse(p) => CliError::Malformed(p.to_string()),
            LoadError::History(h) => CliError::Malformed(h.to_string()),
        }
    }
}
