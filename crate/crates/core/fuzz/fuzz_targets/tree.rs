#![no_main]

use git_historian::model::{hash_object, parse_tree, serialize_tree, ObjectKind};
use libfuzzer_sys::fuzz_target;

// Parsing keeps input order; serializing sorts into git order. A serialized
// tree must parse back to itself.
fuzz_target!(|data: &[u8]| {
    let id = hash_object(ObjectKind::Tree, data);
    if let Ok(entries) = parse_tree(id, data) {
        let canonical = serialize_tree(&entries);
        let again = parse_tree(id, &canonical).expect("serialized tree parses");
        assert_eq!(again.len(), entries.len());
        assert_eq!(serialize_tree(&again), canonical);
    }
});
