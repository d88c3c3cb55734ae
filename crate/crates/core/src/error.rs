use std::io;
use std::path::PathBuf;

use crate::model::ObjectId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed object id {0:?}")]
    MalformedId(String),

    #[error("object {0} is missing from the store")]
    MissingObject(ObjectId),

    #[error("corrupt object {id}: {reason}")]
    CorruptObject { id: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("failed to fetch {origin}: {message}")]
    NetworkFailure { origin: String, message: String },

    #[error("{origin}: ref {reference} points to missing object {target}")]
    CorruptRemote {
        origin: String,
        reference: String,
        target: ObjectId,
    },

    #[error("{0}: fewer than 2 snapshots captured")]
    InsufficientSnapshots(String),

    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("storage failure: {0}")]
    StorageFailure(String),

    #[error("commit {0} compared with itself")]
    IdenticalCommits(ObjectId),

    #[error("{0} is not a git repository")]
    NotARepository(PathBuf),

    #[error("{0} has no remote configured")]
    NoRemoteConfigured(PathBuf),

    #[error("git toolchain failure: {0}")]
    ToolchainFailure(String),

    #[error("archive error: {0}")]
    Archive(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn corrupt(id: impl ToString, reason: impl Into<String>) -> Self {
        Error::CorruptObject {
            id: id.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<rusqlite::Error> for Error {
    fn from(err: rusqlite::Error) -> Self {
        Error::StorageFailure(err.to_string())
    }
}
