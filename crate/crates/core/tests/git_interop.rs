//! The object reader against repositories written by the `git` executable.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use git_historian::model::{EntryKind, ObjectId};
use git_historian::odb::{full_tree_manifest, DiskRepository, RepositoryReader};

fn git(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = Command::new("git")
        .current_dir(dir)
        .args(args)
        .env("GIT_CONFIG_GLOBAL", "/dev/null")
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("GIT_AUTHOR_NAME", "Ada Example")
        .env("GIT_AUTHOR_EMAIL", "ada@example.com")
        .env("GIT_COMMITTER_NAME", "Ada Example")
        .env("GIT_COMMITTER_EMAIL", "ada@example.com")
        .env("GIT_AUTHOR_DATE", "2023-01-01T00:00:00+0100")
        .env("GIT_COMMITTER_DATE", "2023-01-01T00:00:00+0100")
        .output()
        .expect("git runs");
    assert!(out.status.success(), "git {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn text(bytes: Vec<u8>) -> String {
    String::from_utf8(bytes).unwrap()
}

/// Repository with subdirectories, an executable, a symlink, a large file
/// revised several times (delta material), a merge and an annotated tag.
fn build_repo(dir: &Path) {
    git(dir, &["init", "-q", "-b", "main"]);
    fs::create_dir_all(dir.join("src/nested")).unwrap();
    let mut big: String = (0..2000).map(|i| format!("line {i} of a long file\n")).collect();
    for round in 0..4 {
        fs::write(dir.join("big.txt"), &big).unwrap();
        fs::write(dir.join("src/nested/deep.rs"), format!("fn f() -> u32 {{ {round} }}\n")).unwrap();
        git(dir, &["add", "-A"]);
        git(dir, &["commit", "-q", "-m", &format!("round {round}")]);
        big.push_str(&format!("appended in round {round}\n"));
        big = big.replacen("line 7 ", &format!("line 7 ({round}) "), 1);
    }
    fs::write(dir.join("run.sh"), "#!/bin/sh\necho hi\n").unwrap();
    let mut perms = fs::metadata(dir.join("run.sh")).unwrap().permissions();
    std::os::unix::fs::PermissionsExt::set_mode(&mut perms, 0o755);
    fs::set_permissions(dir.join("run.sh"), perms).unwrap();
    std::os::unix::fs::symlink("big.txt", dir.join("link")).unwrap();
    fs::write(dir.join("bin.dat"), [0u8, 159, 146, 150, 255, 0, 1]).unwrap();
    git(dir, &["add", "-A"]);
    git(dir, &["commit", "-q", "-m", "extras\n\nwith a body"]);
    git(dir, &["checkout", "-q", "-b", "side", "HEAD~2"]);
    fs::write(dir.join("side.txt"), "side\n").unwrap();
    git(dir, &["add", "-A"]);
    git(dir, &["commit", "-q", "-m", "side"]);
    git(dir, &["checkout", "-q", "main"]);
    git(dir, &["merge", "-q", "--no-edit", "side"]);
    git(dir, &["tag", "-a", "v1", "-m", "release"]);
}

fn all_objects(dir: &Path) -> Vec<(ObjectId, String)> {
    text(git(dir, &["cat-file", "--batch-all-objects", "--batch-check=%(objectname) %(objecttype)"]))
        .lines()
        .map(|l| {
            let (id, kind) = l.split_once(' ').unwrap();
            (id.parse().unwrap(), kind.to_string())
        })
        .collect()
}

fn check_every_object(dir: &Path) {
    let repo = DiskRepository::open(dir.join(".git")).unwrap();
    let objects = all_objects(dir);
    assert!(objects.len() > 20);
    for (id, kind) in &objects {
        let raw = repo.read_raw(id).unwrap().expect("object present");
        assert_eq!(raw.kind.as_str(), kind, "{id}");
        let expected = git(dir, &["cat-file", kind, &id.to_hex()]);
        assert_eq!(raw.data, expected, "{id}");
        if kind == "commit" {
            let commit = repo.commit(id).unwrap();
            let parents = text(git(dir, &["rev-list", "--parents", "-n1", &id.to_hex()]));
            let listed: Vec<ObjectId> = parents.split_whitespace().skip(1).map(|p| p.parse().unwrap()).collect();
            assert_eq!(commit.parents, listed);
        }
    }
}

fn check_manifest(dir: &Path) {
    let repo = DiskRepository::open(dir.join(".git")).unwrap();
    let head: ObjectId = text(git(dir, &["rev-parse", "HEAD"])).trim().parse().unwrap();
    let manifest = full_tree_manifest(&repo, &head).unwrap();
    let ours: BTreeMap<String, (u32, ObjectId)> = manifest
        .entries
        .iter()
        .map(|e| (e.path.clone(), (e.mode, e.content_id)))
        .collect();
    let theirs: BTreeMap<String, (u32, ObjectId)> = text(git(dir, &["ls-tree", "-r", "HEAD"]))
        .lines()
        .map(|l| {
            let (meta, path) = l.split_once('\t').unwrap();
            let parts: Vec<&str> = meta.split(' ').collect();
            (path.to_string(), (u32::from_str_radix(parts[0], 8).unwrap(), parts[2].parse().unwrap()))
        })
        .collect();
    assert_eq!(ours, theirs);
    let link = manifest.get("link").unwrap();
    assert_eq!(link.kind, EntryKind::Symlink);
    assert_eq!(manifest.get("run.sh").unwrap().mode, 0o100755);
}

#[test]
fn loose_objects_match_git() {
    let dir = tempfile::tempdir().unwrap();
    build_repo(dir.path());
    check_every_object(dir.path());
    check_manifest(dir.path());
}

#[test]
fn packed_objects_with_deltas_match_git() {
    let dir = tempfile::tempdir().unwrap();
    build_repo(dir.path());
    git(dir.path(), &["gc", "-q", "--aggressive", "--prune=now"]);
    let packs: Vec<_> = fs::read_dir(dir.path().join(".git/objects/pack"))
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "pack"))
        .collect();
    assert_eq!(packs.len(), 1);
    let verify = text(git(
        dir.path(),
        &["verify-pack", "-v", packs[0].path().to_str().unwrap()],
    ));
    assert!(verify.contains("chain length"), "expected delta chains in the pack");
    check_every_object(dir.path());
    check_manifest(dir.path());
}

#[test]
fn missing_object_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    build_repo(dir.path());
    let repo = DiskRepository::open(dir.path().join(".git")).unwrap();
    let absent = ObjectId::from_bytes([0x42; 20]);
    assert!(!repo.has_object(&absent));
    assert!(repo.read_raw(&absent).unwrap().is_none());
    assert!(matches!(repo.commit(&absent), Err(git_historian::Error::MissingObject(_))));
}
