//! Zlib-compressed loose objects (`objects/ab/cdef...`).

use std::io::Read;

use flate2::read::ZlibDecoder;

use super::RawObject;
use crate::error::{Error, Result};
use crate::model::ObjectKind;

/// Objects larger than this are refused rather than inflated.
pub const MAX_OBJECT_SIZE: u64 = 1 << 32;

/// Decodes a loose object file: zlib stream holding `<kind> <size>\0<data>`.
pub fn decode_loose_object(compressed: &[u8]) -> Result<RawObject> {
    let mut decoder = ZlibDecoder::new(compressed);

    // header is at most "commit " + 20 digits + NUL
    let mut header = Vec::with_capacity(32);
    let mut byte = [0u8; 1];
    loop {
        let n = decoder
            .read(&mut byte)
            .map_err(|e| Error::corrupt("loose object", e.to_string()))?;
        if n == 0 {
            return Err(Error::corrupt("loose object", "truncated header"));
        }
        if byte[0] == 0 {
            break;
        }
        header.push(byte[0]);
        if header.len() > 32 {
            return Err(Error::corrupt("loose object", "header too long"));
        }
    }

    let sp = header
        .iter()
        .position(|&b| b == b' ')
        .ok_or_else(|| Error::corrupt("loose object", "header without size"))?;
    let kind = ObjectKind::from_name(&header[..sp])
        .ok_or_else(|| Error::corrupt("loose object", "unknown object type"))?;
    let size: u64 = std::str::from_utf8(&header[sp + 1..])
        .ok()
        .filter(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()))
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::corrupt("loose object", "bad size"))?;
    if size > MAX_OBJECT_SIZE {
        return Err(Error::corrupt("loose object", "object too large"));
    }

    let mut data = Vec::with_capacity(size.min(1 << 20) as usize);
    decoder
        .take(size + 1)
        .read_to_end(&mut data)
        .map_err(|e| Error::corrupt("loose object", e.to_string()))?;
    if data.len() as u64 != size {
        return Err(Error::corrupt(
            "loose object",
            format!("size mismatch: header {size}, body {}", data.len()),
        ));
    }
    Ok(RawObject { kind, data })
}

/// Encodes an object in loose format. Used when materializing fixtures.
pub fn encode_loose_object(kind: ObjectKind, data: &[u8]) -> Vec<u8> {
    use flate2::write::ZlibEncoder;
    use flate2::Compression;
    use std::io::Write;

    let mut encoder = ZlibEncoder::new(Vec::new(), Compression::fast());
    let header = format!("{} {}\0", kind.as_str(), data.len());
    encoder.write_all(header.as_bytes()).expect("writing to Vec");
    encoder.write_all(data).expect("writing to Vec");
    encoder.finish().expect("writing to Vec")
}
