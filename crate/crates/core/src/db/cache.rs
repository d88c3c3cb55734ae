use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha1::{Digest, Sha1};

use crate::error::{Error, Result};

/// One cached check result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedCheck {
    pub origin: String,
    pub branch: String,
    pub dataset_version: String,
    pub payload: String,
    pub stored_at: String,
}

/// File-per-key result cache. The file name hashes (origin, branch); the
/// dataset version lives inside, so a stale entry is simply overwritten.
#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Cache {
        Cache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, origin: &str, branch: &str) -> PathBuf {
        let mut hasher = Sha1::new();
        hasher.update(origin.as_bytes());
        hasher.update([0]);
        hasher.update(branch.as_bytes());
        self.dir.join(format!("{}.json", hex::encode(hasher.finalize())))
    }

    /// The payload stored for this key, if it was stored under `version`.
    pub fn lookup(&self, origin: &str, branch: &str, version: &str) -> Option<CachedCheck> {
        let bytes = fs::read(self.path_for(origin, branch)).ok()?;
        let entry: CachedCheck = serde_json::from_slice(&bytes).ok()?;
        (entry.origin == origin && entry.branch == branch && entry.dataset_version == version)
            .then_some(entry)
    }

    pub fn store(&self, origin: &str, branch: &str, version: &str, payload: &str) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let entry = CachedCheck {
            origin: origin.to_string(),
            branch: branch.to_string(),
            dataset_version: version.to_string(),
            payload: payload.to_string(),
            stored_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        };
        let path = self.path_for(origin, branch);
        let tmp = path.with_extension(format!("{}.tmp", std::process::id()));
        let body = serde_json::to_vec_pretty(&entry).expect("cache entry serializes");
        fs::write(&tmp, body).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }
}
