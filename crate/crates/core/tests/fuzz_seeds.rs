//! Replays the checked-in fuzz corpora through the parsers, so regressions
//! found by fuzzing stay covered without a fuzzing toolchain.

use std::fs;
use std::path::{Path, PathBuf};

use git_historian::analyze::secrets::SecretPatterns;
use git_historian::dataset::parse_record;
use git_historian::model::{hash_object, parse_commit, parse_tree, serialize_commit, serialize_tree, ObjectKind};
use git_historian::odb::loose::decode_loose_object;
use git_historian::odb::pack::{apply_delta, PackFile, PackIndex};
use git_historian::snapshot::SnapshotManifest;

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn loose_objects_decode() {
    for (path, bytes) in seeds("loose_object") {
        decode_loose_object(&bytes).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn pack_seeds_resolve_every_object() {
    for (_, bytes) in seeds("pack_index") {
        assert!(!PackIndex::parse(&bytes).unwrap().is_empty());
    }
    for (_, bytes) in seeds("pack_file") {
        let split = u32::from_be_bytes(bytes[..4].try_into().unwrap()) as usize;
        let (index, pack) = bytes[4..].split_at(split);
        let pack = PackFile::from_bytes(index, pack.to_vec()).unwrap();
        let ids: Vec<_> = pack.index().ids().collect();
        for id in ids {
            let raw = pack.read(&id, &|_| Ok(None)).unwrap().unwrap();
            assert_eq!(hash_object(raw.kind, &raw.data), id);
        }
    }
}

#[test]
fn delta_seed_applies() {
    let (_, bytes) = seeds("delta").into_iter().find(|(p, _)| p.ends_with("seed")).unwrap();
    let len = bytes[0] as usize;
    let (base, delta) = bytes[1..].split_at(len);
    assert_eq!(apply_delta(base, delta).unwrap(), b"hello worldthere, this is the base text\n");
}

#[test]
fn commit_seeds_round_trip_or_fail_cleanly() {
    for (path, bytes) in seeds("commit") {
        let id = hash_object(ObjectKind::Commit, &bytes);
        match parse_commit(id, &bytes) {
            Ok(commit) => assert!(parse_commit(id, &serialize_commit(&commit)).is_ok()),
            Err(_) => assert!(
                path.ends_with("identity-line-break") || path.ends_with("tag"),
                "{}",
                path.display()
            ),
        }
    }
}

#[test]
fn tree_seeds_canonicalize() {
    for (_, bytes) in seeds("tree") {
        let id = hash_object(ObjectKind::Tree, &bytes);
        let entries = parse_tree(id, &bytes).unwrap();
        let canonical = serialize_tree(&entries);
        assert_eq!(serialize_tree(&parse_tree(id, &canonical).unwrap()), canonical);
    }
}

#[test]
fn text_seeds_parse() {
    for (_, bytes) in seeds("dataset_record") {
        parse_record(std::str::from_utf8(&bytes).unwrap().trim_end()).unwrap();
    }
    let (_, pretty) = seeds("snapshot_manifest").into_iter().find(|(p, _)| p.ends_with("pretty.json")).unwrap();
    SnapshotManifest::parse(std::str::from_utf8(&pretty).unwrap()).unwrap();
    for (_, bytes) in seeds("secret_patterns") {
        assert!(!SecretPatterns::parse(std::str::from_utf8(&bytes).unwrap()).unwrap().patterns().is_empty());
    }
}
