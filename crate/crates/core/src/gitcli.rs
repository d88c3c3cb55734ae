//! Thin wrapper around the `git` executable for the operations that need a
//! transport (fetching) or that must stay independent of the built-in object
//! reader (oracles, fixtures).

use std::ffi::OsStr;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use crate::error::{Error, Result};

/// A `git` command with ambient configuration shut out.
pub fn command(git_dir: Option<&Path>) -> Command {
    let mut cmd = Command::new("git");
    if let Some(dir) = git_dir {
        cmd.arg("--git-dir").arg(dir);
    }
    cmd.env("GIT_CONFIG_NOSYSTEM", "1")
        .env("GIT_CONFIG_GLOBAL", "/dev/null")
        .env("GIT_TERMINAL_PROMPT", "0")
        .env("LC_ALL", "C")
        .env_remove("GIT_DIR")
        .env_remove("GIT_WORK_TREE")
        .env_remove("GIT_INDEX_FILE")
        .env_remove("GIT_OBJECT_DIRECTORY")
        .stdin(Stdio::null());
    cmd
}

/// Runs git and returns stdout, mapping failures to `ToolchainFailure`.
pub fn run<I, S>(git_dir: Option<&Path>, args: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = S>,
    S: AsRef<OsStr>,
{
    let output = output(git_dir, args)?;
    if !output.status.success() {
        return Err(Error::ToolchainFailure(
            String::from_utf8_lossy(&output.stderr).trim().to_string(),
        ));
    }
    Ok(output.stdout)
}

pub fn output<I, S>(git_dir: Option<&Path>, args: I) -> Result<Output>
where
    I: IntoIterator<Item = S>,
    S: AsRef<OsStr>,
{
    command(git_dir)
        .args(args)
        .output()
        .map_err(|e| Error::ToolchainFailure(format!("cannot run git: {e}")))
}

/// Creates a bare repository that never garbage collects on its own.
pub fn init_bare(path: &Path) -> Result<()> {
    run(None, [OsStr::new("init"), OsStr::new("--bare"), OsStr::new("-q"), path.as_os_str()])?;
    run(Some(path), ["config", "gc.auto", "0"])?;
    run(Some(path), ["config", "gc.pruneExpire", "never"])?;
    run(Some(path), ["config", "fetch.unpackLimit", "1"])?;
    Ok(())
}
