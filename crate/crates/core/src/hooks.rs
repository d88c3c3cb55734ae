//! Installation of the post-merge / post-checkout monitoring hooks.

use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};

use crate::db::BranchFilter;
use crate::error::{Error, Result};
use crate::gitcli;

/// First line after the shebang of every hook we write.
pub const MARKER: &str = "# installed by git-historian";
pub const CHAIN_SUFFIX: &str = ".pre-githistorian";

/// (hook name, what triggers it)
pub const HOOKS: [(&str, &str); 2] = [
    ("post-merge", "triggered after git pull"),
    ("post-checkout", "triggered after git checkout"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attachment {
    pub hooks_dir: PathBuf,
    pub remote_url: String,
    /// Hooks whose previous content now lives in `<hook>.pre-githistorian`.
    pub chained: Vec<String>,
}

fn git_in(repo: &Path, args: &[&str]) -> Result<Option<String>> {
    let output = gitcli::command(None)
        .current_dir(repo)
        .args(args)
        .output()
        .map_err(|e| Error::ToolchainFailure(format!("cannot run git: {e}")))?;
    if !output.status.success() {
        return Ok(None);
    }
    Ok(Some(String::from_utf8_lossy(&output.stdout).trim_end().to_string()))
}

/// URL of `origin`, or of the first configured remote.
pub fn remote_url(repo: &Path) -> Result<String> {
    let remotes = git_in(repo, &["remote"])?.unwrap_or_default();
    let names: Vec<&str> = remotes.lines().filter(|l| !l.is_empty()).collect();
    let name = if names.contains(&"origin") {
        "origin"
    } else {
        match names.first() {
            Some(first) => first,
            None => return Err(Error::NoRemoteConfigured(repo.to_path_buf())),
        }
    };
    match git_in(repo, &["remote", "get-url", name])? {
        Some(url) if !url.is_empty() => Ok(url),
        _ => Err(Error::NoRemoteConfigured(repo.to_path_buf())),
    }
}

fn hooks_dir(repo: &Path) -> Result<PathBuf> {
    if !repo.is_dir() {
        return Err(Error::NotARepository(repo.to_path_buf()));
    }
    if git_in(repo, &["rev-parse", "--git-dir"])?.is_none() {
        return Err(Error::NotARepository(repo.to_path_buf()));
    }
    let path = git_in(repo, &["rev-parse", "--git-path", "hooks"])?
        .ok_or_else(|| Error::NotARepository(repo.to_path_buf()))?;
    let path = PathBuf::from(path);
    Ok(if path.is_absolute() { path } else { repo.join(path) })
}

fn shell_quote(text: &str) -> String {
    format!("'{}'", text.replace('\'', r"'\''"))
}

/// Hook body for `hook`.
pub fn hook_script(hook: &str, trigger: &str, executable: &str, url: &str, branch: BranchFilter) -> String {
    format!(
        "#!/bin/sh
{MARKER}
# {hook} ({trigger})
hook_dir=$(dirname \"$0\")
status=0
if [ -x \"$hook_dir/{hook}{CHAIN_SUFFIX}\" ]; then
    \"$hook_dir/{hook}{CHAIN_SUFFIX}\" \"$@\"
    status=$?
fi
historian={exe}
if [ ! -x \"$historian\" ]; then
    historian=git-historian
fi
\"$historian\" check-cached {url} --branch {branch} --event {hook}
result=$?
if [ \"$status\" -ne 0 ]; then
    exit \"$status\"
fi
exit \"$result\"
",
        exe = shell_quote(executable),
        url = shell_quote(url),
    )
}

fn is_ours(path: &Path) -> bool {
    fs::read_to_string(path)
        .map(|body| body.lines().nth(1) == Some(MARKER))
        .unwrap_or(false)
}

/// Installs both hooks in the repository at `repo`. Re-running is safe:
/// our own hooks are rewritten in place and never chained to themselves.
pub fn attach(repo: &Path, branch: BranchFilter, executable: &str) -> Result<Attachment> {
    let dir = hooks_dir(repo)?;
    let url = remote_url(repo)?;
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut chained = Vec::new();
    for (hook, trigger) in HOOKS {
        let path = dir.join(hook);
        let saved = dir.join(format!("{hook}{CHAIN_SUFFIX}"));
        if path.exists() && !is_ours(&path) {
            if saved.exists() {
                return Err(Error::Archive(format!(
                    "{} exists and {} is taken; move one of them first",
                    path.display(),
                    saved.display()
                )));
            }
            fs::rename(&path, &saved).map_err(|e| Error::io(&path, e))?;
            chained.push(hook.to_string());
        }
        let body = hook_script(hook, trigger, executable, &url, branch);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        fs::set_permissions(&path, fs::Permissions::from_mode(0o755))
            .map_err(|e| Error::io(&path, e))?;
    }
    Ok(Attachment {
        hooks_dir: dir,
        remote_url: url,
        chained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting() {
        assert_eq!(shell_quote("a'b"), r"'a'\''b'");
        let body = hook_script("post-merge", "t", "/x/y", "https://h/r", BranchFilter::Main);
        assert!(body.starts_with("#!/bin/sh\n# installed by git-historian\n"));
        assert!(body.contains("check-cached 'https://h/r' --branch main --event post-merge"));
    }
}
