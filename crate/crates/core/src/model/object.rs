use std::cmp::Ordering;

use sha1::{Digest, Sha1};

use super::{CommitRecord, EntryKind, GitTime, ObjectId, RawTreeEntry, Signature};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectKind {
    Commit,
    Tree,
    Blob,
    Tag,
}

impl ObjectKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectKind::Commit => "commit",
            ObjectKind::Tree => "tree",
            ObjectKind::Blob => "blob",
            ObjectKind::Tag => "tag",
        }
    }

    pub fn from_name(name: &[u8]) -> Option<ObjectKind> {
        match name {
            b"commit" => Some(ObjectKind::Commit),
            b"tree" => Some(ObjectKind::Tree),
            b"blob" => Some(ObjectKind::Blob),
            b"tag" => Some(ObjectKind::Tag),
            _ => None,
        }
    }
}

/// Object name of `data` stored as an object of `kind`.
pub fn hash_object(kind: ObjectKind, data: &[u8]) -> ObjectId {
    let mut hasher = Sha1::new();
    hasher.update(kind.as_str().as_bytes());
    hasher.update(b" ");
    hasher.update(data.len().to_string().as_bytes());
    hasher.update([0u8]);
    hasher.update(data);
    ObjectId::from_bytes(hasher.finalize().into())
}

/// Parses the body of a commit object (without the loose-object header).
pub fn parse_commit(id: ObjectId, data: &[u8]) -> Result<CommitRecord> {
    let (header, message) = match find(data, b"\n\n") {
        Some(pos) => (&data[..pos], &data[pos + 2..]),
        None => (data.strip_suffix(b"\n").unwrap_or(data), &[][..]),
    };

    let mut headers: Vec<(&[u8], Vec<u8>)> = Vec::new();
    for line in header.split(|&b| b == b'\n') {
        if let Some(cont) = line.strip_prefix(b" ") {
            match headers.last_mut() {
                Some((_, value)) => {
                    value.push(b'\n');
                    value.extend_from_slice(cont);
                }
                None => return Err(Error::corrupt(id, "continuation line without header")),
            }
            continue;
        }
        let (key, value) = match line.iter().position(|&b| b == b' ') {
            Some(sp) => (&line[..sp], &line[sp + 1..]),
            None => (line, &[][..]),
        };
        if key.is_empty() {
            return Err(Error::corrupt(id, "empty header name"));
        }
        headers.push((key, value.to_vec()));
    }

    let mut tree = None;
    let mut parents: Vec<ObjectId> = Vec::new();
    let mut author = None;
    let mut committer = None;
    let mut extra_headers = Vec::new();
    for (key, value) in headers {
        match key {
            b"tree" if tree.is_none() => tree = Some(hex_id(id, &value)?),
            b"parent" => {
                let parent = hex_id(id, &value)?;
                if parent == id {
                    return Err(Error::corrupt(id, "commit lists itself as parent"));
                }
                if !parents.contains(&parent) {
                    parents.push(parent);
                }
            }
            b"author" if author.is_none() => author = Some(parse_signature(id, &value)?),
            b"committer" if committer.is_none() => {
                committer = Some(parse_signature(id, &value)?)
            }
            _ => extra_headers.push((key.to_vec(), value)),
        }
    }

    Ok(CommitRecord {
        id,
        parents,
        tree: tree.ok_or_else(|| Error::corrupt(id, "missing tree header"))?,
        author: author.ok_or_else(|| Error::corrupt(id, "missing author header"))?,
        committer: committer.ok_or_else(|| Error::corrupt(id, "missing committer header"))?,
        message: message.to_vec(),
        extra_headers,
    })
}

/// Inverse of [`parse_commit`] for well-formed records.
pub fn serialize_commit(commit: &CommitRecord) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(format!("tree {}\n", commit.tree).as_bytes());
    for parent in &commit.parents {
        out.extend_from_slice(format!("parent {parent}\n").as_bytes());
    }
    out.extend_from_slice(b"author ");
    out.extend_from_slice(format_signature(&commit.author).as_bytes());
    out.extend_from_slice(b"\ncommitter ");
    out.extend_from_slice(format_signature(&commit.committer).as_bytes());
    out.push(b'\n');
    for (key, value) in &commit.extra_headers {
        out.extend_from_slice(key);
        out.push(b' ');
        for (i, line) in value.split(|&b| b == b'\n').enumerate() {
            if i > 0 {
                out.extend_from_slice(b"\n ");
            }
            out.extend_from_slice(line);
        }
        out.push(b'\n');
    }
    out.push(b'\n');
    out.extend_from_slice(&commit.message);
    out
}

fn hex_id(owner: ObjectId, value: &[u8]) -> Result<ObjectId> {
    std::str::from_utf8(value)
        .ok()
        .and_then(|text| super::parse_object_id(text).ok())
        .ok_or_else(|| Error::corrupt(owner, "invalid object id in header"))
}

fn parse_signature(owner: ObjectId, value: &[u8]) -> Result<Signature> {
    let bad = |what: &str| Error::corrupt(owner, format!("invalid identity: {what}"));
    if value.contains(&b'\n') {
        return Err(bad("line break"));
    }
    let lt = value.iter().position(|&b| b == b'<').ok_or_else(|| bad("no '<'"))?;
    let gt = lt + value[lt..]
        .iter()
        .position(|&b| b == b'>')
        .ok_or_else(|| bad("no '>'"))?;
    let name = String::from_utf8_lossy(value[..lt].trim_ascii_end()).into_owned();
    let email = String::from_utf8_lossy(&value[lt + 1..gt]).into_owned();
    let rest = std::str::from_utf8(&value[gt + 1..]).map_err(|_| bad("date not utf-8"))?;
    let mut fields = rest.split_ascii_whitespace();
    let seconds = fields
        .next()
        .and_then(|s| s.parse::<i64>().ok())
        .ok_or_else(|| bad("timestamp"))?;
    let offset_minutes = match fields.next() {
        Some(tz) => parse_tz(tz).ok_or_else(|| bad("timezone"))?,
        None => 0,
    };
    Ok(Signature {
        name,
        email,
        time: GitTime::new(seconds, offset_minutes),
    })
}

fn parse_tz(tz: &str) -> Option<i32> {
    let (sign, digits) = match tz.as_bytes().first()? {
        b'+' => (1, &tz[1..]),
        b'-' => (-1, &tz[1..]),
        _ => return None,
    };
    if digits.len() != 4 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let hours: i32 = digits[..2].parse().ok()?;
    let minutes: i32 = digits[2..].parse().ok()?;
    Some(sign * (hours * 60 + minutes))
}

fn format_signature(sig: &Signature) -> String {
    let offset = sig.time.offset_minutes;
    let sign = if offset < 0 { '-' } else { '+' };
    let abs = offset.unsigned_abs();
    format!(
        "{} <{}> {} {}{:02}{:02}",
        sig.name,
        sig.email,
        sig.time.seconds,
        sign,
        abs / 60,
        abs % 60
    )
}

/// Parses one level of a tree object.
pub fn parse_tree(id: ObjectId, data: &[u8]) -> Result<Vec<RawTreeEntry>> {
    let mut entries = Vec::new();
    let mut rest = data;
    while !rest.is_empty() {
        let sp = rest
            .iter()
            .position(|&b| b == b' ')
            .ok_or_else(|| Error::corrupt(id, "tree entry without mode"))?;
        let mode_text = &rest[..sp];
        if mode_text.is_empty() || mode_text.len() > 7 {
            return Err(Error::corrupt(id, "bad tree entry mode"));
        }
        let mode = mode_text.iter().try_fold(0u32, |acc, &b| match b {
            b'0'..=b'7' => Some(acc * 8 + u32::from(b - b'0')),
            _ => None,
        });
        let mode = mode.ok_or_else(|| Error::corrupt(id, "bad tree entry mode"))?;
        let kind = EntryKind::from_mode(mode)
            .ok_or_else(|| Error::corrupt(id, format!("unknown entry mode {mode:o}")))?;
        rest = &rest[sp + 1..];

        let nul = rest
            .iter()
            .position(|&b| b == 0)
            .ok_or_else(|| Error::corrupt(id, "unterminated entry name"))?;
        let name = &rest[..nul];
        if name.is_empty() || name == b"." || name == b".." || name.contains(&b'/') {
            return Err(Error::corrupt(id, "invalid entry name"));
        }
        rest = &rest[nul + 1..];

        if rest.len() < ObjectId::LEN {
            return Err(Error::corrupt(id, "truncated entry id"));
        }
        let entry_id = ObjectId::from_slice(&rest[..ObjectId::LEN]).expect("length checked");
        rest = &rest[ObjectId::LEN..];

        entries.push(RawTreeEntry {
            name: name.to_vec(),
            mode,
            kind,
            id: entry_id,
        });
    }
    Ok(entries)
}

/// Serializes tree entries in canonical git order.
pub fn serialize_tree(entries: &[RawTreeEntry]) -> Vec<u8> {
    let mut sorted: Vec<&RawTreeEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| git_tree_order(a, b));
    let mut out = Vec::new();
    for entry in sorted {
        out.extend_from_slice(format!("{:o} ", entry.mode).as_bytes());
        out.extend_from_slice(&entry.name);
        out.push(0);
        out.extend_from_slice(entry.id.as_bytes());
    }
    out
}

// Directories sort as if their name carried a trailing slash.
fn git_tree_order(a: &RawTreeEntry, b: &RawTreeEntry) -> Ordering {
    let key = |e: &RawTreeEntry| {
        let mut k = e.name.clone();
        if e.kind == EntryKind::Directory {
            k.push(b'/');
        }
        k
    };
    key(a).cmp(&key(b))
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_commit() -> CommitRecord {
        let tree = hash_object(ObjectKind::Tree, b"");
        CommitRecord {
            id: tree,
            parents: vec![],
            tree,
            author: Signature::new("A U Thor", "author@example.com", GitTime::new(1_700_000_000, 60)),
            committer: Signature::new("C O Mitter", "c@example.com", GitTime::new(1_700_000_100, -90)),
            message: b"subject\n\nbody\n".to_vec(),
            extra_headers: vec![(b"gpgsig".to_vec(), b"line one\nline two".to_vec())],
        }
    }

    #[test]
    fn empty_tree_has_well_known_id() {
        assert_eq!(
            hash_object(ObjectKind::Tree, b"").to_hex(),
            "4b825dc642cb6eb9a060e54bf8d69288fbee4904"
        );
        assert_eq!(
            hash_object(ObjectKind::Blob, b"").to_hex(),
            "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"
        );
    }

    #[test]
    fn commit_round_trip() {
        let commit = sample_commit();
        let bytes = serialize_commit(&commit);
        let id = hash_object(ObjectKind::Commit, &bytes);
        let parsed = parse_commit(id, &bytes).unwrap();
        assert_eq!(parsed.author, commit.author);
        assert_eq!(parsed.committer, commit.committer);
        assert_eq!(parsed.message, commit.message);
        assert_eq!(parsed.extra_headers, commit.extra_headers);
        assert_eq!(serialize_commit(&parsed), bytes);
    }

    #[test]
    fn parses_git_written_commit() {
        let text = "tree 4b825dc642cb6eb9a060e54bf8d69288fbee4904\n\
                    author Jane Doe <jane@example.org> 1112911993 -0700\n\
                    committer Jane Doe <jane@example.org> 1112911993 +0530\n\
                    \n\
                    Initial revision\n";
        let id = hash_object(ObjectKind::Commit, text.as_bytes());
        let commit = parse_commit(id, text.as_bytes()).unwrap();
        assert!(commit.is_root());
        assert_eq!(commit.author.time.offset_minutes, -420);
        assert_eq!(commit.committer.time.offset_minutes, 330);
        assert_eq!(commit.message, b"Initial revision\n");
    }

    #[test]
    fn rejects_commit_without_tree() {
        let text = b"author a <b> 1 +0000\ncommitter a <b> 1 +0000\n\nmsg";
        let id = hash_object(ObjectKind::Commit, text);
        assert!(parse_commit(id, text).is_err());
    }

    #[test]
    fn rejects_identity_continued_over_lines() {
        let text = format!(
            "tree {}\nauthor a <b\n c> 1 +0000\ncommitter a <b> 1 +0000\n\nmsg",
            hash_object(ObjectKind::Tree, b"")
        );
        let id = hash_object(ObjectKind::Commit, text.as_bytes());
        assert!(parse_commit(id, text.as_bytes()).is_err());
    }

    #[test]
    fn tree_round_trip_uses_git_order() {
        let blob = hash_object(ObjectKind::Blob, b"x");
        let sub = hash_object(ObjectKind::Tree, b"");
        let entries = vec![
            RawTreeEntry { name: b"a.b".to_vec(), mode: 0o100644, kind: EntryKind::File, id: blob },
            RawTreeEntry { name: b"a".to_vec(), mode: 0o40000, kind: EntryKind::Directory, id: sub },
            RawTreeEntry { name: b"a-".to_vec(), mode: 0o120000, kind: EntryKind::Symlink, id: blob },
        ];
        let bytes = serialize_tree(&entries);
        let parsed = parse_tree(blob, &bytes).unwrap();
        let names: Vec<&[u8]> = parsed.iter().map(|e| e.name.as_slice()).collect();
        assert_eq!(names, vec![&b"a-"[..], b"a.b", b"a"]);
        assert_eq!(parsed[2].kind, EntryKind::Directory);
        assert!(bytes.starts_with(b"120000 a-\0"));
    }

    #[test]
    fn rejects_slash_in_entry_name() {
        let blob = hash_object(ObjectKind::Blob, b"x");
        let mut bytes = b"100644 a/b\0".to_vec();
        bytes.extend_from_slice(blob.as_bytes());
        assert!(parse_tree(blob, &bytes).is_err());
    }
}
