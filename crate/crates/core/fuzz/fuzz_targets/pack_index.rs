#![no_main]

use git_historian::odb::pack::PackIndex;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(index) = PackIndex::parse(data) {
        for id in index.ids() {
            assert!(index.lookup(&id).is_some());
        }
    }
});
