use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(hdgame::Error),
}

impl HarnessError {
    /// Parameter errors from the core library become config errors that
    /// keep the parameter name.
    pub fn from_core(e: hdgame::Error) -> Self {
        match e {
            hdgame::Error::Parameter { name, reason } => HarnessError::Config {
                key: name.to_string(),
                reason,
            },
            other => HarnessError::Core(other),
        }
    }

    /// Process exit code: configuration problems are usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 2,
            _ => 1,
        }
    }
}

impl From<hdgame::Error> for HarnessError {
    fn from(e: hdgame::Error) -> Self {
        HarnessError::Core(e)
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn config_error(key: &str, reason: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

pub(crate) fn io_error(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}
