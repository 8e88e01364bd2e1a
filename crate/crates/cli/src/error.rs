use std::io;

use reqrank_core::corpus::CorpusError;
use reqrank_core::embed::EmbedError;
use reqrank_core::eval::EvalError;
use reqrank_core::rank::RankError;
use reqrank_core::towers::{TowerError, TrainError};

/// A command failure, classified by exit status: bad invocation, config or
/// input data exits 2, anything that fails while running exits 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn runtime(msg: impl std::fmt::Display) -> Self {
        Self::Runtime(anyhow::anyhow!("{msg}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

fn is_missing(e: &io::Error) -> bool {
    matches!(e.kind(), io::ErrorKind::NotFound | io::ErrorKind::PermissionDenied)
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match &e {
            CorpusError::Io { source, .. } if !is_missing(source) => Self::runtime(e),
            _ => Self::Usage(e.to_string()),
        }
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        match &e {
            EmbedError::Io { source, .. } if !is_missing(source) => Self::runtime(e),
            _ => Self::Usage(e.to_string()),
        }
    }
}

impl From<TowerError> for CliError {
    fn from(e: TowerError) -> Self {
        match &e {
            TowerError::Io { source, .. } if is_missing(source) => Self::Usage(e.to_string()),
            TowerError::Checkpoint(_) => Self::Usage(e.to_string()),
            _ => Self::runtime(e),
        }
    }
}

impl From<RankError> for CliError {
    fn from(e: RankError) -> Self {
        match e {
            RankError::Io { ref source, .. } if is_missing(source) => Self::Usage(e.to_string()),
            RankError::Format(_) | RankError::BadParams { .. } => Self::Usage(e.to_string()),
            RankError::Embedding(inner) => inner.into(),
            RankError::Tower(inner) => inner.into(),
            other => Self::runtime(other),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::InvalidConfig(_) | TrainError::NoPairs | TrainError::Coverage(_) => Self::Usage(e.to_string()),
            other => Self::runtime(other),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Corpus(inner) => inner.into(),
            EvalError::NothingToAverage | EvalError::UnmatchedRequest(_) => Self::Usage(e.to_string()),
            other => Self::runtime(other),
        }
    }
}

pub fn io_error(path: &std::path::Path, e: io::Error) -> CliError {
    let msg = format!("{}: {e}", path.display());
    if is_missing(&e) {
        CliError::Usage(msg)
    } else {
        CliError::runtime(msg)
    }
}
