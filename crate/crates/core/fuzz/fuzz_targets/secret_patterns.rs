#![no_main]

use git_historian::analyze::secrets::SecretPatterns;
use libfuzzer_sys::fuzz_target;

// The input is both a pattern table and content to scan with it.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(patterns) = SecretPatterns::parse(text) {
        let _ = patterns.match_content(data);
        for line in text.lines() {
            let _ = patterns.match_filename(line);
        }
    }
    let _ = SecretPatterns::builtin().match_content(data);
});
