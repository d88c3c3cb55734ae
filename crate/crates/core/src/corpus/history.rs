//! In-memory commit graph with explicit file states and rebase-style replay.
//! Useful for building fixtures by hand as well.

use std::collections::{BTreeMap, HashMap};

use crate::model::{CommitRecord, GitTime, ObjectId, Signature};
use crate::odb::{FileSpec, MemoryRepository};

pub type Files = BTreeMap<String, Vec<u8>>;

#[derive(Debug, Clone)]
pub struct Node {
    pub parents: Vec<ObjectId>,
    pub files: Files,
    pub message: String,
    pub author: Signature,
    pub committer: Signature,
}

#[derive(Default)]
pub struct History {
    pub repo: MemoryRepository,
    nodes: HashMap<ObjectId, Node>,
}

/// `path -> Some(content)` to set, `None` to delete.
pub type Changes = BTreeMap<String, Option<Vec<u8>>>;

pub fn diff(old: &Files, new: &Files) -> Changes {
    let mut out = Changes::new();
    for (path, content) in new {
        if old.get(path) != Some(content) {
            out.insert(path.clone(), Some(content.clone()));
        }
    }
    for path in old.keys() {
        if !new.contains_key(path) {
            out.insert(path.clone(), None);
        }
    }
    out
}

pub fn apply(base: &Files, changes: &Changes) -> Files {
    let mut out = base.clone();
    for (path, change) in changes {
        match change {
            Some(content) => {
                out.insert(path.clone(), content.clone());
            }
            None => {
                out.remove(path);
            }
        }
    }
    out
}

pub fn signature(name: &str, email: &str, seconds: i64, offset: i32) -> Signature {
    Signature::new(name, email, GitTime::new(seconds, offset))
}

impl History {
    pub fn commit(&mut self, node: Node) -> ObjectId {
        let specs: BTreeMap<String, FileSpec> = node
            .files
            .iter()
            .map(|(p, c)| (p.clone(), FileSpec::regular(c.clone())))
            .collect();
        let tree = self.repo.write_tree(&specs);
        let id = self.repo.insert_commit(&CommitRecord {
            id: ObjectId::from_bytes([0; 20]),
            parents: node.parents.clone(),
            tree,
            author: node.author.clone(),
            committer: node.committer.clone(),
            message: node.message.clone().into_bytes(),
            extra_headers: Vec::new(),
        });
        self.nodes.insert(id, node);
        id
    }

    pub fn node(&self, id: &ObjectId) -> &Node {
        &self.nodes[id]
    }

    pub fn files(&self, id: &ObjectId) -> &Files {
        &self.node(id).files
    }

    /// What `id` changed relative to its first parent.
    pub fn changes(&self, id: &ObjectId) -> Changes {
        let node = self.node(id);
        let empty = Files::new();
        let base = node.parents.first().map(|p| self.files(p)).unwrap_or(&empty);
        diff(base, &node.files)
    }

    /// Recreates every commit of `order` (oldest first) that has a parent in
    /// `mapping`, re-applying its own changes on top of the new first
    /// parent. New ids are added to `mapping`.
    pub fn replay(&mut self, order: &[ObjectId], mapping: &mut HashMap<ObjectId, ObjectId>) {
        for old in order {
            if mapping.contains_key(old) {
                continue;
            }
            let node = self.node(old).clone();
            if !node.parents.iter().any(|p| mapping.contains_key(p)) {
                continue;
            }
            let changes = self.changes(old);
            let parents: Vec<ObjectId> = node
                .parents
                .iter()
                .map(|p| *mapping.get(p).unwrap_or(p))
                .collect();
            let base = self.files(&parents[0]).clone();
            let new = self.commit(Node {
                parents,
                files: apply(&base, &changes),
                ..node
            });
            mapping.insert(*old, new);
        }
    }
}
