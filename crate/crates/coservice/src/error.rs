use std::path::PathBuf;

use mrin_core::attribution::AttributionError;
use mrin_core::evalharness::EvalError;
use mrin_core::neuralnet::NetError;
use mrin_core::sessionlog::SessionError;
use thiserror::Error;

/// Failure of a CLI workflow, classified by exit code.
#[derive(Debug, Error)]
pub enum CommandError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CommandError {
    /// 2 config, 3 data, 4 numeric failure, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CommandError::Config(_) => 2,
            CommandError::Data(_) => 3,
            CommandError::Numeric(_) => 4,
            CommandError::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CommandError {
        let path = path.into();
        move |source| CommandError::Io { path, source }
    }
}

impl From<SessionError> for CommandError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::BadParams(m) => CommandError::Config(m),
            other => CommandError::Data(other.to_string()),
        }
    }
}

impl From<NetError> for CommandError {
    fn from(e: NetError) -> Self {
        match e {
            NetError::InvalidConfig(m) => CommandError::Config(m),
            other => CommandError::Data(other.to_string()),
        }
    }
}

impl From<AttributionError> for CommandError {
    fn from(e: AttributionError) -> Self {
        match e {
            AttributionError::NumericFailure { .. } => CommandError::Numeric(e.to_string()),
            AttributionError::Net(n) => n.into(),
            other => CommandError::Data(other.to_string()),
        }
    }
}

impl From<EvalError> for CommandError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Attribution(a) => a.into(),
            other => CommandError::Data(other.to_string()),
        }
    }
}
