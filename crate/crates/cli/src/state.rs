//! Where the database, cache, archives and reports live.

use std::env;
use std::path::PathBuf;

use git_historian::db::Cache;

pub const STATE_DIR_VAR: &str = "GIT_HISTORIAN_STATE_DIR";
pub const DB_VAR: &str = "GIT_HISTORIAN_DB";

/// `$GIT_HISTORIAN_STATE_DIR`, else `$XDG_STATE_HOME/git-historian`, else
/// `~/.local/state/git-historian`.
pub fn state_dir() -> PathBuf {
    if let Some(dir) = env::var_os(STATE_DIR_VAR).filter(|v| !v.is_empty()) {
        return PathBuf::from(dir);
    }
    if let Some(dir) = env::var_os("XDG_STATE_HOME").filter(|v| !v.is_empty()) {
        return PathBuf::from(dir).join("git-historian");
    }
    let home = env::var_os("HOME").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    home.join(".local/state/git-historian")
}

pub fn database_path() -> PathBuf {
    env::var_os(DB_VAR)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| state_dir().join("historian.db"))
}

pub fn cache() -> Cache {
    Cache::new(state_dir().join("cache"))
}

pub fn archive_root() -> PathBuf {
    state_dir().join("archives")
}
