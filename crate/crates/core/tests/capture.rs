//! Snapshot capture against a real remote served from the local filesystem.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::Command;

use git_historian::categorize::{Category, MetadataField};
use git_historian::dataset::analyze_pair;
use git_historian::model::ObjectId;
use git_historian::snapshot::{export_dataset, import_dataset, list_snapshot_pairs, OriginArchive};
use git_historian::Error;

fn git(dir: &Path, args: &[&str]) -> String {
    let out = Command::new("git")
        .current_dir(dir)
        .args(args)
        .env("GIT_CONFIG_GLOBAL", "/dev/null")
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("GIT_AUTHOR_NAME", "Ada Example")
        .env("GIT_AUTHOR_EMAIL", "ada@example.com")
        .env("GIT_COMMITTER_NAME", "Ada Example")
        .env("GIT_COMMITTER_EMAIL", "ada@example.com")
        .env("GIT_AUTHOR_DATE", "2023-01-01T00:00:00+0000")
        .env("GIT_COMMITTER_DATE", "2023-01-01T00:00:00+0000")
        .output()
        .expect("git runs");
    assert!(out.status.success(), "git {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap().trim().to_string()
}

struct Remote {
    _tmp: tempfile::TempDir,
    work: std::path::PathBuf,
    url: String,
}

/// A bare remote with three commits on main, a pull request ref and a tag.
fn remote() -> Remote {
    let tmp = tempfile::tempdir().unwrap();
    let bare = tmp.path().join("remote.git");
    let work = tmp.path().join("work");
    fs::create_dir_all(&work).unwrap();
    git(tmp.path(), &["init", "-q", "--bare", "-b", "main", bare.to_str().unwrap()]);
    git(&work, &["init", "-q", "-b", "main"]);
    for i in 0..3 {
        fs::write(work.join(format!("f{i}.txt")), format!("{i}\n")).unwrap();
        git(&work, &["add", "-A"]);
        git(&work, &["commit", "-q", "-m", &format!("commit {i}")]);
    }
    git(&work, &["remote", "add", "origin", bare.to_str().unwrap()]);
    git(&work, &["push", "-q", "origin", "main"]);
    git(&work, &["push", "-q", "origin", "HEAD~1:refs/pull/7/head"]);
    git(&work, &["tag", "-a", "v1", "-m", "release", "HEAD~2"]);
    git(&work, &["push", "-q", "origin", "v1"]);
    Remote {
        url: bare.to_str().unwrap().to_string(),
        work,
        _tmp: tmp,
    }
}

#[test]
fn amend_between_captures_is_meta() {
    let remote = remote();
    let root = tempfile::tempdir().unwrap();
    let mut archive = OriginArchive::open_or_init(root.path(), &remote.url).unwrap();
    let s1 = archive.capture_at(1_000).unwrap();
    let head: ObjectId = git(&remote.work, &["rev-parse", "HEAD"]).parse().unwrap();
    assert_eq!(s1.refs["refs/heads/main"], head);
    assert!(s1.refs.contains_key("refs/pull/7/head"));
    let tag_target: ObjectId = git(&remote.work, &["rev-parse", "HEAD~2"]).parse().unwrap();
    assert_eq!(s1.refs["refs/tags/v1"], tag_target, "annotated tags are peeled");

    git(&remote.work, &["commit", "-q", "--amend", "-m", "commit 2, reworded"]);
    git(&remote.work, &["push", "-q", "--force", "origin", "main"]);
    archive.capture_at(2_000).unwrap();

    // the archive reloads from disk with both snapshots
    let archive = OriginArchive::load(&archive.storage_path).unwrap();
    let pairs = list_snapshot_pairs(&archive).unwrap();
    assert_eq!(pairs.len(), 1);
    let reader = archive.reader().unwrap();
    let records = analyze_pair(pairs[0].0, pairs[0].1, &reader).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].branch.raw_name, "refs/heads/main");
    assert_eq!(records[0].altered, BTreeSet::from([head]));
    assert_eq!(records[0].root_causes.len(), 1);
    assert_eq!(
        records[0].root_causes[0].category,
        Category::Meta { fields: BTreeSet::from([MetadataField::Message]) }
    );
}

#[test]
fn capture_times_must_increase() {
    let remote = remote();
    let root = tempfile::tempdir().unwrap();
    let mut archive = OriginArchive::open_or_init(root.path(), &remote.url).unwrap();
    archive.capture_at(500).unwrap();
    assert!(matches!(archive.capture_at(500), Err(Error::Archive(_))));
    assert!(matches!(archive.capture_at(499), Err(Error::Archive(_))));
    assert_eq!(archive.snapshots.len(), 1);
    assert!(matches!(list_snapshot_pairs(&archive), Err(Error::InsufficientSnapshots(_))));
}

#[test]
fn unreachable_origin_is_a_network_failure() {
    let root = tempfile::tempdir().unwrap();
    let missing = root.path().join("nowhere.git");
    let mut archive = OriginArchive::open_or_init(root.path(), missing.to_str().unwrap()).unwrap();
    assert!(matches!(archive.capture_at(1), Err(Error::NetworkFailure { .. })));
    assert!(archive.snapshots.is_empty());
}

#[test]
fn dataset_export_round_trips() {
    let remote = remote();
    let root = tempfile::tempdir().unwrap();
    let mut archive = OriginArchive::open_or_init(root.path(), &remote.url).unwrap();
    archive.capture_at(10).unwrap();
    fs::write(remote.work.join("new.txt"), "new\n").unwrap();
    git(&remote.work, &["add", "-A"]);
    git(&remote.work, &["commit", "-q", "-m", "more"]);
    git(&remote.work, &["push", "-q", "origin", "main"]);
    archive.capture_at(20).unwrap();

    let out = root.path().join("snapshots.jsonl");
    export_dataset(std::slice::from_ref(&archive), &out).unwrap();
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 2);
    let imported = import_dataset(&out, root.path()).unwrap();
    assert_eq!(imported.len(), 1);
    assert_eq!(imported[0].origin, archive.origin);
    assert_eq!(imported[0].storage_path, archive.storage_path);
    assert_eq!(imported[0].snapshots, archive.snapshots);

    // fast-forward only: nothing altered
    let pairs = list_snapshot_pairs(&imported[0]).unwrap();
    let reader = imported[0].reader().unwrap();
    assert!(analyze_pair(pairs[0].0, pairs[0].1, &reader).unwrap().is_empty());
}
