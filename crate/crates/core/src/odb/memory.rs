use std::collections::{BTreeMap, HashMap};

use super::{RawObject, RepositoryReader};
use crate::error::Result;
use crate::model::{
    hash_object, serialize_commit, serialize_tree, CommitRecord, EntryKind, ObjectId, ObjectKind,
    RawTreeEntry,
};

/// Object store held entirely in memory. Ids are real git object names, so
/// contents written here can be materialized into an on-disk repository.
#[derive(Debug, Clone, Default)]
pub struct MemoryRepository {
    objects: HashMap<ObjectId, RawObject>,
}

/// A file to place in a tree built by [`MemoryRepository::write_tree`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileSpec {
    pub content: Vec<u8>,
    pub mode: u32,
}

impl FileSpec {
    pub fn regular(content: impl Into<Vec<u8>>) -> Self {
        FileSpec {
            content: content.into(),
            mode: 0o100644,
        }
    }
}

impl MemoryRepository {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, kind: ObjectKind, data: Vec<u8>) -> ObjectId {
        let id = hash_object(kind, &data);
        self.objects.entry(id).or_insert(RawObject { kind, data });
        id
    }

    pub fn insert_blob(&mut self, data: impl Into<Vec<u8>>) -> ObjectId {
        self.insert(ObjectKind::Blob, data.into())
    }

    pub fn insert_tree(&mut self, entries: &[RawTreeEntry]) -> ObjectId {
        self.insert(ObjectKind::Tree, serialize_tree(entries))
    }

    /// Stores the commit and returns its id; `commit.id` is ignored.
    pub fn insert_commit(&mut self, commit: &CommitRecord) -> ObjectId {
        self.insert(ObjectKind::Commit, serialize_commit(commit))
    }

    /// Builds nested trees for a flat `path -> file` map and returns the root.
    pub fn write_tree(&mut self, files: &BTreeMap<String, FileSpec>) -> ObjectId {
        let mut root = DirNode::default();
        for (path, spec) in files {
            let blob = self.insert_blob(spec.content.clone());
            let mut node = &mut root;
            let mut parts = path.split('/').peekable();
            while let Some(part) = parts.next() {
                if parts.peek().is_none() {
                    node.files.insert(part.to_string(), (spec.mode, blob));
                } else {
                    node = node.dirs.entry(part.to_string()).or_default();
                }
            }
        }
        self.write_dir(&root)
    }

    fn write_dir(&mut self, node: &DirNode) -> ObjectId {
        let mut entries = Vec::new();
        for (name, child) in &node.dirs {
            let id = self.write_dir(child);
            entries.push(RawTreeEntry {
                name: name.clone().into_bytes(),
                mode: 0o40000,
                kind: EntryKind::Directory,
                id,
            });
        }
        for (name, (mode, id)) in &node.files {
            entries.push(RawTreeEntry {
                name: name.clone().into_bytes(),
                mode: *mode,
                kind: EntryKind::from_mode(*mode).unwrap_or(EntryKind::File),
                id: *id,
            });
        }
        self.insert_tree(&entries)
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn objects(&self) -> impl Iterator<Item = (&ObjectId, &RawObject)> {
        self.objects.iter()
    }

    pub fn remove(&mut self, id: &ObjectId) -> Option<RawObject> {
        self.objects.remove(id)
    }
}

#[derive(Default)]
struct DirNode {
    dirs: BTreeMap<String, DirNode>,
    files: BTreeMap<String, (u32, ObjectId)>,
}

impl RepositoryReader for MemoryRepository {
    fn read_raw(&self, id: &ObjectId) -> Result<Option<RawObject>> {
        Ok(self.objects.get(id).cloned())
    }

    fn has_object(&self, id: &ObjectId) -> bool {
        self.objects.contains_key(id)
    }
}
