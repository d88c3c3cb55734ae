#![no_main]

use std::path::Path;

use git_historian::snapshot::{parse_dataset, SnapshotManifest};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(manifest) = SnapshotManifest::parse(text) {
        let _ = manifest.into_snapshot();
    }
    let _ = parse_dataset(data, Path::new("/nonexistent"));
});
