//! Git object model shared by every stage of the pipeline.
//!
//! Commits, trees and snapshots are plain immutable values. Reading them out
//! of an object database is the job of [`crate::odb`].

mod object;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use object::{
    hash_object, parse_commit, parse_tree, serialize_commit, serialize_tree, ObjectKind,
};

/// SHA-1 object name.
///
/// Stored as raw bytes; the byte order matches the lexicographic order of the
/// lowercase hex form, so `Ord` agrees with string comparison.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId([u8; 20]);

impl ObjectId {
    pub const LEN: usize = 20;
    pub const HEX_LEN: usize = 40;

    pub fn from_bytes(bytes: [u8; 20]) -> Self {
        ObjectId(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        <[u8; 20]>::try_from(bytes).ok().map(ObjectId)
    }

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// First `len` hex digits, for display.
    pub fn short(&self, len: usize) -> String {
        let mut hex = self.to_hex();
        hex.truncate(len);
        hex
    }
}

/// Parses a 40 character hex object name, normalizing case.
pub fn parse_object_id(text: &str) -> Result<ObjectId> {
    if text.len() != ObjectId::HEX_LEN {
        return Err(Error::MalformedId(text.to_string()));
    }
    let mut bytes = [0u8; 20];
    hex::decode_to_slice(text, &mut bytes).map_err(|_| Error::MalformedId(text.to_string()))?;
    Ok(ObjectId(bytes))
}

impl FromStr for ObjectId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_object_id(s)
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ObjectId({})", self.to_hex())
    }
}

impl Serialize for ObjectId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ObjectId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_object_id(&text).map_err(serde::de::Error::custom)
    }
}

/// Timestamp as recorded in a commit header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GitTime {
    pub seconds: i64,
    pub offset_minutes: i32,
}

impl GitTime {
    pub fn new(seconds: i64, offset_minutes: i32) -> Self {
        GitTime {
            seconds,
            offset_minutes,
        }
    }
}

/// Author or committer identity plus its date.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub name: String,
    pub email: String,
    pub time: GitTime,
}

impl Signature {
    pub fn new(name: impl Into<String>, email: impl Into<String>, time: GitTime) -> Self {
        Signature {
            name: name.into(),
            email: email.into(),
            time,
        }
    }

    pub fn same_identity(&self, other: &Signature) -> bool {
        self.name == other.name && self.email == other.email
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CommitRecord {
    pub id: ObjectId,
    /// Ordered, duplicate free.
    pub parents: Vec<ObjectId>,
    pub tree: ObjectId,
    pub author: Signature,
    pub committer: Signature,
    pub message: Vec<u8>,
    /// Headers other than tree/parent/author/committer, in order of appearance.
    /// Continuation lines are joined with `\n`.
    pub extra_headers: Vec<(Vec<u8>, Vec<u8>)>,
}

impl CommitRecord {
    pub fn first_parent(&self) -> Option<ObjectId> {
        self.parents.first().copied()
    }

    pub fn is_root(&self) -> bool {
        self.parents.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    File,
    Directory,
    Symlink,
    /// Gitlink entry; never expanded, never part of a manifest.
    Submodule,
}

impl EntryKind {
    pub fn from_mode(mode: u32) -> Option<EntryKind> {
        match mode & 0o170000 {
            0o040000 => Some(EntryKind::Directory),
            0o100000 => Some(EntryKind::File),
            0o120000 => Some(EntryKind::Symlink),
            0o160000 => Some(EntryKind::Submodule),
            _ => None,
        }
    }
}

/// One entry of a single tree object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTreeEntry {
    pub name: Vec<u8>,
    pub mode: u32,
    pub kind: EntryKind,
    pub id: ObjectId,
}

/// A path in a recursively expanded tree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TreeEntry {
    /// Slash separated, relative to the repository root.
    pub path: String,
    pub kind: EntryKind,
    pub content_id: ObjectId,
    pub mode: u32,
}

/// The observable state of one repository at one capture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub origin: String,
    pub captured_at: i64,
    pub refs: BTreeMap<String, ObjectId>,
    pub snapshot_id: String,
}

impl Snapshot {
    /// Branch-like refs the detector works on: heads and pull request heads.
    pub fn branches(&self) -> impl Iterator<Item = (&String, &ObjectId)> {
        self.refs.iter().filter(|(name, _)| is_branch_ref(name))
    }
}

pub fn is_branch_ref(name: &str) -> bool {
    if name.starts_with("refs/heads/") {
        return true;
    }
    match name.strip_prefix("refs/pull/") {
        Some(rest) => rest
            .strip_suffix("/head")
            .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit())),
        None => false,
    }
}
