#![no_main]

use git_historian::dataset::{parse_record, read_records};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(record) = parse_record(text) {
            let line = serde_json::to_string(&record).expect("record serializes");
            assert_eq!(parse_record(&line).expect("serialized record parses"), record);
        }
    }
    let _ = read_records(data);
});
