#![no_main]

use git_historian::odb::pack::{read_entry, PackFile};
use libfuzzer_sys::fuzz_target;

// Input: u32 big-endian index length, the index, then the pack.
fuzz_target!(|data: &[u8]| {
    if data.len() < 4 {
        return;
    }
    let split = u32::from_be_bytes([data[0], data[1], data[2], data[3]]) as usize;
    let rest = &data[4..];
    if split > rest.len() {
        for offset in [0u64, 12] {
            let _ = read_entry(rest, offset);
        }
        return;
    }
    let (index, pack) = rest.split_at(split);
    if let Ok(pack) = PackFile::from_bytes(index, pack.to_vec()) {
        let ids: Vec<_> = pack.index().ids().collect();
        for id in ids {
            let _ = pack.read(&id, &|_| Ok(None));
        }
    }
});
