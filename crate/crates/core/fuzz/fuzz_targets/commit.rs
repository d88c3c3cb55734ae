#![no_main]

use git_historian::model::{hash_object, parse_commit, serialize_commit, ObjectKind};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let id = hash_object(ObjectKind::Commit, data);
    if let Ok(commit) = parse_commit(id, data) {
        let bytes = serialize_commit(&commit);
        let again = parse_commit(id, &bytes).expect("serialized commit parses");
        assert_eq!(again.parents, commit.parents);
        assert_eq!(again.tree, commit.tree);
        assert_eq!(again.message, commit.message);
    }
});
