#![no_main]

use git_historian::odb::pack::apply_delta;
use libfuzzer_sys::fuzz_target;

// Input: one length byte for the base, the base, then the delta.
fuzz_target!(|data: &[u8]| {
    let Some((&len, rest)) = data.split_first() else {
        return;
    };
    let len = (len as usize).min(rest.len());
    let (base, delta) = rest.split_at(len);
    let _ = apply_delta(base, delta);
});
