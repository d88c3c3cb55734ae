//! Read access to Git object stores and the tree manifests built on top.

mod disk;
pub mod loose;
mod memory;
pub mod pack;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    parse_commit, parse_tree, CommitRecord, EntryKind, ObjectId, ObjectKind, RawTreeEntry,
    TreeEntry,
};

pub use disk::DiskRepository;
pub use memory::{FileSpec, MemoryRepository};

/// Trees nested deeper than this are treated as corrupt.
const MAX_TREE_DEPTH: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawObject {
    pub kind: ObjectKind,
    pub data: Vec<u8>,
}

/// Read-only view over an object store.
///
/// Implementations must be safe to share between worker threads and must
/// return the same answer for the same id every time.
pub trait RepositoryReader: Send + Sync {
    fn read_raw(&self, id: &ObjectId) -> Result<Option<RawObject>>;

    fn has_object(&self, id: &ObjectId) -> bool {
        matches!(self.read_raw(id), Ok(Some(_)))
    }

    fn commit(&self, id: &ObjectId) -> Result<Arc<CommitRecord>> {
        let object = self.read_typed(id, ObjectKind::Commit)?;
        parse_commit(*id, &object).map(Arc::new)
    }

    fn tree(&self, id: &ObjectId) -> Result<Vec<RawTreeEntry>> {
        let object = self.read_typed(id, ObjectKind::Tree)?;
        parse_tree(*id, &object)
    }

    fn blob(&self, id: &ObjectId) -> Result<Vec<u8>> {
        self.read_typed(id, ObjectKind::Blob)
    }

    fn read_typed(&self, id: &ObjectId, kind: ObjectKind) -> Result<Vec<u8>> {
        let object = self.read_raw(id)?.ok_or(Error::MissingObject(*id))?;
        if object.kind != kind {
            return Err(Error::corrupt(
                id,
                format!("expected {}, found {}", kind.as_str(), object.kind.as_str()),
            ));
        }
        Ok(object.data)
    }

    /// Every entry of the recursively expanded tree, directories included,
    /// in depth-first git order.
    fn tree_entries(&self, tree_id: &ObjectId) -> Result<Vec<TreeEntry>> {
        let mut out = Vec::new();
        // (prefix, tree, depth); reversed so the first child is popped first
        let mut stack = vec![(String::new(), *tree_id, 0usize)];
        while let Some((prefix, id, depth)) = stack.pop() {
            if depth > MAX_TREE_DEPTH {
                return Err(Error::corrupt(tree_id, "tree nesting too deep"));
            }
            let mut children = Vec::new();
            for entry in self.tree(&id)? {
                let name = String::from_utf8_lossy(&entry.name);
                let path = if prefix.is_empty() {
                    name.into_owned()
                } else {
                    format!("{prefix}/{name}")
                };
                if entry.kind == EntryKind::Directory {
                    children.push((path.clone(), entry.id, depth + 1));
                }
                out.push(TreeEntry {
                    path,
                    kind: entry.kind,
                    content_id: entry.id,
                    mode: entry.mode,
                });
            }
            stack.extend(children.into_iter().rev());
        }
        Ok(out)
    }
}

impl<R: RepositoryReader + ?Sized> RepositoryReader for &R {
    fn read_raw(&self, id: &ObjectId) -> Result<Option<RawObject>> {
        (**self).read_raw(id)
    }

    fn has_object(&self, id: &ObjectId) -> bool {
        (**self).has_object(id)
    }

    fn commit(&self, id: &ObjectId) -> Result<Arc<CommitRecord>> {
        (**self).commit(id)
    }
}

/// Files and symlinks reachable from one root tree, sorted by path.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<TreeEntry>,
    /// Gitlink entries encountered and ignored.
    pub skipped_submodules: usize,
}

impl Manifest {
    pub fn from_entries(mut entries: Vec<TreeEntry>) -> Self {
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        Manifest {
            entries,
            skipped_submodules: 0,
        }
    }

    pub fn get(&self, path: &str) -> Option<&TreeEntry> {
        self.entries
            .binary_search_by(|e| e.path.as_str().cmp(path))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn contains(&self, path: &str, content_id: &ObjectId) -> bool {
        self.get(path).is_some_and(|e| e.content_id == *content_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn tree_manifest<R: RepositoryReader + ?Sized>(reader: &R, tree_id: &ObjectId) -> Result<Manifest> {
    let mut manifest = Manifest::default();
    for entry in reader.tree_entries(tree_id)? {
        match entry.kind {
            EntryKind::File | EntryKind::Symlink => manifest.entries.push(entry),
            EntryKind::Submodule => manifest.skipped_submodules += 1,
            EntryKind::Directory => {}
        }
    }
    manifest.entries.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(manifest)
}

/// Recursively expanded, path sorted file list of a commit.
pub fn full_tree_manifest<R: RepositoryReader + ?Sized>(
    reader: &R,
    commit_id: &ObjectId,
) -> Result<Manifest> {
    let commit = reader.commit(commit_id)?;
    tree_manifest(reader, &commit.tree)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeKind {
    Added,
    Modified,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathChange {
    pub path: String,
    pub kind: ChangeKind,
    pub old: Option<TreeEntry>,
    pub new: Option<TreeEntry>,
}

impl PathChange {
    pub fn old_content_id(&self) -> Option<ObjectId> {
        self.old.as_ref().map(|e| e.content_id)
    }

    pub fn new_content_id(&self) -> Option<ObjectId> {
        self.new.as_ref().map(|e| e.content_id)
    }
}

/// Path-level difference between two manifests, sorted by path.
pub fn diff_manifests(old: &Manifest, new: &Manifest) -> Vec<PathChange> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < old.entries.len() || j < new.entries.len() {
        let a = old.entries.get(i);
        let b = new.entries.get(j);
        match (a, b) {
            (Some(a), Some(b)) if a.path == b.path => {
                if a.content_id != b.content_id || a.mode != b.mode {
                    out.push(PathChange {
                        path: a.path.clone(),
                        kind: ChangeKind::Modified,
                        old: Some(a.clone()),
                        new: Some(b.clone()),
                    });
                }
                i += 1;
                j += 1;
            }
            (Some(a), Some(b)) if a.path < b.path => {
                out.push(removed(a));
                i += 1;
            }
            (Some(_), Some(b)) => {
                out.push(added(b));
                j += 1;
            }
            (Some(a), None) => {
                out.push(removed(a));
                i += 1;
            }
            (None, Some(b)) => {
                out.push(added(b));
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

fn added(entry: &TreeEntry) -> PathChange {
    PathChange {
        path: entry.path.clone(),
        kind: ChangeKind::Added,
        old: None,
        new: Some(entry.clone()),
    }
}

fn removed(entry: &TreeEntry) -> PathChange {
    PathChange {
        path: entry.path.clone(),
        kind: ChangeKind::Removed,
        old: Some(entry.clone()),
        new: None,
    }
}

/// Files changed by a commit relative to its first parent. Root commits
/// report every file as added.
pub fn changed_paths<R: RepositoryReader + ?Sized>(
    reader: &R,
    commit_id: &ObjectId,
) -> Result<Vec<PathChange>> {
    let commit = reader.commit(commit_id)?;
    let new = tree_manifest(reader, &commit.tree)?;
    let old = match commit.first_parent() {
        Some(parent) => full_tree_manifest(reader, &parent)?,
        None => Manifest::default(),
    };
    Ok(diff_manifests(&old, &new))
}

/// Applies a change list to a manifest.
pub fn apply_changes(base: &Manifest, changes: &[PathChange]) -> Manifest {
    let mut entries: std::collections::BTreeMap<String, TreeEntry> = base
        .entries
        .iter()
        .map(|e| (e.path.clone(), e.clone()))
        .collect();
    for change in changes {
        match &change.new {
            Some(entry) => {
                entries.insert(change.path.clone(), entry.clone());
            }
            None => {
                entries.remove(&change.path);
            }
        }
    }
    Manifest {
        entries: entries.into_values().collect(),
        skipped_submodules: 0,
    }
}
