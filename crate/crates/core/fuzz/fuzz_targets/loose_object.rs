#![no_main]

use git_historian::odb::loose::{decode_loose_object, encode_loose_object};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(raw) = decode_loose_object(data) {
        let again = decode_loose_object(&encode_loose_object(raw.kind, &raw.data)).expect("re-encoded object decodes");
        assert_eq!(again.kind, raw.kind);
        assert_eq!(again.data, raw.data);
    }
});
