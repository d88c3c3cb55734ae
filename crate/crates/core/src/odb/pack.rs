//! Pack files (`objects/pack/*.pack`) and their version 2 indexes.

use std::io::Read;

use flate2::read::ZlibDecoder;

use super::loose::MAX_OBJECT_SIZE;
use super::RawObject;
use crate::error::{Error, Result};
use crate::model::{ObjectId, ObjectKind};

const IDX_MAGIC: [u8; 4] = [0xff, b't', b'O', b'c'];
const MAX_DELTA_CHAIN: usize = 10_000;

#[derive(Debug, Clone)]
pub struct PackIndex {
    fanout: [u32; 256],
    ids: Vec<u8>,
    offsets: Vec<u64>,
}

impl PackIndex {
    pub fn parse(data: &[u8]) -> Result<PackIndex> {
        let bad = |why: &str| Error::corrupt("pack index", why.to_string());
        if data.len() < 8 + 256 * 4 || data[..4] != IDX_MAGIC {
            return Err(bad("missing v2 header"));
        }
        if be32(&data[4..8]) != 2 {
            return Err(bad("unsupported index version"));
        }
        let mut fanout = [0u32; 256];
        for (i, slot) in fanout.iter_mut().enumerate() {
            *slot = be32(&data[8 + i * 4..]);
        }
        if fanout.windows(2).any(|w| w[0] > w[1]) {
            return Err(bad("fanout table not monotonic"));
        }
        let count = fanout[255] as usize;

        let ids_at: usize = 8 + 256 * 4;
        let crc_at = ids_at
            .checked_add(count.checked_mul(20).ok_or_else(|| bad("overflow"))?)
            .ok_or_else(|| bad("overflow"))?;
        let off_at = crc_at + count * 4;
        let large_at = off_at + count * 4;
        if data.len() < large_at + 40 {
            return Err(bad("truncated"));
        }

        let ids = data[ids_at..crc_at].to_vec();
        if ids.chunks_exact(20).zip(ids.chunks_exact(20).skip(1)).any(|(a, b)| a >= b) {
            return Err(bad("object names not sorted"));
        }
        for (i, chunk) in ids.chunks_exact(20).enumerate() {
            let expected = fanout[chunk[0] as usize];
            let before = if chunk[0] == 0 { 0 } else { fanout[chunk[0] as usize - 1] };
            if (i as u32) < before || (i as u32) >= expected {
                return Err(bad("fanout does not match object names"));
            }
        }

        let large_count = data.len().saturating_sub(large_at + 40) / 8;
        let mut offsets = Vec::with_capacity(count);
        for i in 0..count {
            let raw = be32(&data[off_at + i * 4..]);
            if raw & 0x8000_0000 == 0 {
                offsets.push(u64::from(raw));
            } else {
                let slot = (raw & 0x7fff_ffff) as usize;
                if slot >= large_count {
                    return Err(bad("large offset out of range"));
                }
                let at = large_at + slot * 8;
                offsets.push(u64::from_be_bytes(data[at..at + 8].try_into().expect("8 bytes")));
            }
        }
        Ok(PackIndex { fanout, ids, offsets })
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn lookup(&self, id: &ObjectId) -> Option<u64> {
        let first = id.as_bytes()[0] as usize;
        let lo = if first == 0 { 0 } else { self.fanout[first - 1] as usize };
        let hi = self.fanout[first] as usize;
        let ids = &self.ids;
        let (mut lo, mut hi) = (lo, hi);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match ids[mid * 20..mid * 20 + 20].cmp(id.as_bytes().as_slice()) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(self.offsets[mid]),
            }
        }
        None
    }

    pub fn ids(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.ids
            .chunks_exact(20)
            .map(|c| ObjectId::from_slice(c).expect("20 bytes"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryHeader {
    Object(ObjectKind),
    OfsDelta { base_offset: u64 },
    RefDelta { base: ObjectId },
}

/// Reads and inflates the entry at `offset`. Deltas are returned unapplied.
pub fn read_entry(pack: &[u8], offset: u64) -> Result<(EntryHeader, Vec<u8>)> {
    let bad = |why: &str| Error::corrupt("pack", format!("entry at {offset}: {why}"));
    let start = usize::try_from(offset).map_err(|_| bad("offset out of range"))?;
    if start < 12 || start >= pack.len() {
        return Err(bad("offset out of range"));
    }
    let mut pos = start;
    let next = |pos: &mut usize| -> Result<u8> {
        let b = *pack.get(*pos).ok_or_else(|| bad("truncated header"))?;
        *pos += 1;
        Ok(b)
    };

    let mut c = next(&mut pos)?;
    let type_code = (c >> 4) & 7;
    let mut size = u64::from(c & 0x0f);
    let mut shift = 4;
    while c & 0x80 != 0 {
        c = next(&mut pos)?;
        if shift > 57 {
            return Err(bad("size varint too long"));
        }
        size |= u64::from(c & 0x7f) << shift;
        shift += 7;
    }
    if size > MAX_OBJECT_SIZE {
        return Err(bad("object too large"));
    }

    let header = match type_code {
        1 => EntryHeader::Object(ObjectKind::Commit),
        2 => EntryHeader::Object(ObjectKind::Tree),
        3 => EntryHeader::Object(ObjectKind::Blob),
        4 => EntryHeader::Object(ObjectKind::Tag),
        6 => {
            let mut c = next(&mut pos)?;
            let mut distance = u64::from(c & 0x7f);
            while c & 0x80 != 0 {
                c = next(&mut pos)?;
                distance = distance
                    .checked_add(1)
                    .and_then(|d| d.checked_mul(128))
                    .map(|d| d + u64::from(c & 0x7f))
                    .ok_or_else(|| bad("delta offset overflow"))?;
            }
            if distance == 0 || distance > offset {
                return Err(bad("delta base out of range"));
            }
            EntryHeader::OfsDelta {
                base_offset: offset - distance,
            }
        }
        7 => {
            let end = pos + ObjectId::LEN;
            let base = pack
                .get(pos..end)
                .and_then(ObjectId::from_slice)
                .ok_or_else(|| bad("truncated base id"))?;
            pos = end;
            EntryHeader::RefDelta { base }
        }
        _ => return Err(bad("invalid entry type")),
    };

    let mut data = Vec::with_capacity(size.min(1 << 20) as usize);
    ZlibDecoder::new(&pack[pos..])
        .take(size + 1)
        .read_to_end(&mut data)
        .map_err(|e| bad(&e.to_string()))?;
    if data.len() as u64 != size {
        return Err(bad("inflated size mismatch"));
    }
    Ok((header, data))
}

fn read_varint(delta: &[u8], pos: &mut usize) -> Result<u64> {
    let mut value = 0u64;
    let mut shift = 0;
    loop {
        let b = *delta
            .get(*pos)
            .ok_or_else(|| Error::corrupt("delta", "truncated size"))?;
        *pos += 1;
        if shift > 63 {
            return Err(Error::corrupt("delta", "size varint too long"));
        }
        value |= u64::from(b & 0x7f) << shift;
        shift += 7;
        if b & 0x80 == 0 {
            return Ok(value);
        }
    }
}

/// Applies a git binary delta to `base`.
pub fn apply_delta(base: &[u8], delta: &[u8]) -> Result<Vec<u8>> {
    let bad = |why: &str| Error::corrupt("delta", why.to_string());
    let mut pos = 0;
    let source_size = read_varint(delta, &mut pos)?;
    if source_size != base.len() as u64 {
        return Err(bad("base size mismatch"));
    }
    let target_size = read_varint(delta, &mut pos)?;
    if target_size > MAX_OBJECT_SIZE {
        return Err(bad("target too large"));
    }
    let target_size = target_size as usize;
    let mut out = Vec::with_capacity(target_size.min(1 << 20));

    while pos < delta.len() {
        let op = delta[pos];
        pos += 1;
        if op & 0x80 != 0 {
            let mut offset = 0usize;
            let mut size = 0usize;
            for i in 0..4 {
                if op & (1 << i) != 0 {
                    let b = *delta.get(pos).ok_or_else(|| bad("truncated copy"))?;
                    pos += 1;
                    offset |= (b as usize) << (8 * i);
                }
            }
            for i in 0..3 {
                if op & (0x10 << i) != 0 {
                    let b = *delta.get(pos).ok_or_else(|| bad("truncated copy"))?;
                    pos += 1;
                    size |= (b as usize) << (8 * i);
                }
            }
            if size == 0 {
                size = 0x10000;
            }
            let end = offset.checked_add(size).ok_or_else(|| bad("copy overflow"))?;
            if end > base.len() {
                return Err(bad("copy out of base bounds"));
            }
            if out.len() + size > target_size {
                return Err(bad("target overflow"));
            }
            out.extend_from_slice(&base[offset..end]);
        } else if op != 0 {
            let n = op as usize;
            let chunk = delta.get(pos..pos + n).ok_or_else(|| bad("truncated insert"))?;
            if out.len() + n > target_size {
                return Err(bad("target overflow"));
            }
            out.extend_from_slice(chunk);
            pos += n;
        } else {
            return Err(bad("reserved opcode 0"));
        }
    }
    if out.len() != target_size {
        return Err(bad("target size mismatch"));
    }
    Ok(out)
}

/// A pack held in memory together with its index.
pub struct PackFile {
    index: PackIndex,
    data: Vec<u8>,
}

impl PackFile {
    pub fn from_bytes(index: &[u8], data: Vec<u8>) -> Result<PackFile> {
        let index = PackIndex::parse(index)?;
        if data.len() < 12 || &data[..4] != b"PACK" {
            return Err(Error::corrupt("pack", "missing PACK signature"));
        }
        let version = be32(&data[4..8]);
        if version != 2 && version != 3 {
            return Err(Error::corrupt("pack", "unsupported pack version"));
        }
        if be32(&data[8..12]) as usize != index.len() {
            return Err(Error::corrupt("pack", "object count disagrees with index"));
        }
        Ok(PackFile { index, data })
    }

    pub fn index(&self) -> &PackIndex {
        &self.index
    }

    pub fn contains(&self, id: &ObjectId) -> bool {
        self.index.lookup(id).is_some()
    }

    /// Reads `id`, resolving delta chains. Bases outside this pack are
    /// requested through `external`.
    pub fn read(
        &self,
        id: &ObjectId,
        external: &dyn Fn(&ObjectId) -> Result<Option<RawObject>>,
    ) -> Result<Option<RawObject>> {
        let Some(offset) = self.index.lookup(id) else {
            return Ok(None);
        };
        let mut deltas = Vec::new();
        let mut cursor = offset;
        let (kind, mut data) = loop {
            if deltas.len() > MAX_DELTA_CHAIN {
                return Err(Error::corrupt(id, "delta chain too long"));
            }
            let (header, data) = read_entry(&self.data, cursor)?;
            match header {
                EntryHeader::Object(kind) => break (kind, data),
                EntryHeader::OfsDelta { base_offset } => {
                    deltas.push(data);
                    cursor = base_offset;
                }
                EntryHeader::RefDelta { base } => {
                    deltas.push(data);
                    match self.index.lookup(&base) {
                        Some(next) => cursor = next,
                        None => {
                            let object = external(&base)?.ok_or(Error::MissingObject(base))?;
                            break (object.kind, object.data);
                        }
                    }
                }
            }
        };
        for delta in deltas.iter().rev() {
            data = apply_delta(&data, delta)?;
        }
        Ok(Some(RawObject { kind, data }))
    }
}

fn be32(bytes: &[u8]) -> u32 {
    u32::from_be_bytes(bytes[..4].try_into().expect("4 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn varint(mut n: usize) -> Vec<u8> {
        let mut out = Vec::new();
        loop {
            let b = (n & 0x7f) as u8;
            n >>= 7;
            if n == 0 {
                out.push(b);
                return out;
            }
            out.push(b | 0x80);
        }
    }

    #[test]
    fn delta_copy_and_insert() {
        let base = b"hello world";
        let mut delta = varint(base.len());
        delta.extend(varint(13));
        // copy offset 0 size 6 => "hello "
        delta.extend([0x80 | 0x10, 6]);
        delta.extend([7]);
        delta.extend(b"git-fan");
        let out = apply_delta(base, &delta).unwrap();
        assert_eq!(out, b"hello git-fan");
    }

    #[test]
    fn delta_rejects_out_of_bounds_copy() {
        let base = b"abc";
        let mut delta = varint(3);
        delta.extend(varint(10));
        delta.extend([0x80 | 0x01 | 0x10, 2, 10]);
        assert!(apply_delta(base, &delta).is_err());
    }

    #[test]
    fn delta_rejects_wrong_base_size() {
        let delta = [varint(4), varint(0)].concat();
        assert!(apply_delta(b"abc", &delta).is_err());
    }

    #[test]
    fn index_rejects_garbage() {
        assert!(PackIndex::parse(b"").is_err());
        assert!(PackIndex::parse(&[0u8; 2000]).is_err());
    }
}
