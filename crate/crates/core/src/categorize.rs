//! Classification of root cause commits into the alteration taxonomy.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::detect::{reachable_set, snapshot_reachable, BranchAlteration};
use crate::error::{Error, Result};
use crate::model::{CommitRecord, ObjectId, Snapshot};
use crate::odb::{changed_paths, full_tree_manifest, ChangeKind, Manifest, RepositoryReader};

/// Generations searched below the replacement frontier.
pub const MAX_DEPTH: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MetadataField {
    Author,
    Message,
    Date,
    Committer,
    CommitterDate,
    Other,
}

impl MetadataField {
    pub const ALL: [MetadataField; 6] = [
        MetadataField::Author,
        MetadataField::Message,
        MetadataField::Date,
        MetadataField::Committer,
        MetadataField::CommitterDate,
        MetadataField::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetadataField::Author => "Author",
            MetadataField::Message => "Message",
            MetadataField::Date => "Date",
            MetadataField::Committer => "Committer",
            MetadataField::CommitterDate => "CommitterDate",
            MetadataField::Other => "Other",
        }
    }

    pub fn from_name(name: &str) -> Option<MetadataField> {
        MetadataField::ALL.into_iter().find(|f| f.as_str() == name)
    }
}

impl fmt::Display for MetadataField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    FoundIdentical,
    Modified,
    Removed,
    Split,
}

impl Outcome {
    /// Status label used in stored records and reports.
    pub fn status(self) -> &'static str {
        match self {
            Outcome::FoundIdentical => "Found",
            Outcome::Modified => "Modified",
            Outcome::Removed => "Removed",
            Outcome::Split => "Split",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileFate {
    pub path: String,
    /// Content the root cause commit gave this path.
    pub content_id: ObjectId,
    pub outcome: Outcome,
    pub found_in: Option<ObjectId>,
    /// Generation of `found_in`, or the deepest generation searched.
    pub depth: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DirFlags {
    pub content_split: bool,
    pub file_modified: bool,
    pub file_removed: bool,
}

impl DirFlags {
    pub fn is_valid(&self) -> bool {
        let any = self.content_split || self.file_modified || self.file_removed;
        any && !(self.content_split && (self.file_modified || self.file_removed))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Category {
    DifferentBranchName,
    Meta { fields: BTreeSet<MetadataField> },
    Dir { flags: DirFlags, file_fates: Vec<FileFate> },
}

impl Category {
    pub fn tag(&self) -> &'static str {
        match self {
            Category::DifferentBranchName => "DifferentBranchName",
            Category::Meta { .. } => "Meta",
            Category::Dir { .. } => "Dir",
        }
    }

    /// Comma separated subcategory labels in canonical order.
    pub fn sub_category(&self) -> String {
        match self {
            Category::DifferentBranchName => "DifferentBranchName".to_string(),
            Category::Meta { fields } => fields
                .iter()
                .map(|f| f.as_str())
                .collect::<Vec<_>>()
                .join(","),
            Category::Dir { flags, .. } => dir_sub_category(flags),
        }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            Category::DifferentBranchName => true,
            Category::Meta { fields } => !fields.is_empty(),
            Category::Dir { flags, .. } => flags.is_valid(),
        }
    }
}

pub fn dir_sub_category(flags: &DirFlags) -> String {
    let mut parts = Vec::new();
    if flags.content_split {
        parts.push("ContentSplit");
    }
    if flags.file_modified {
        parts.push("FileModified");
    }
    if flags.file_removed {
        parts.push("FileRemoved");
    }
    parts.join(",")
}

/// Fields in which two commits with the same tree differ.
pub fn diff_metadata(old: &CommitRecord, new: &CommitRecord) -> Result<BTreeSet<MetadataField>> {
    if old.id == new.id {
        return Err(Error::IdenticalCommits(old.id));
    }
    let mut fields = BTreeSet::new();
    if !old.author.same_identity(&new.author) {
        fields.insert(MetadataField::Author);
    }
    if old.author.time != new.author.time {
        fields.insert(MetadataField::Date);
    }
    if !old.committer.same_identity(&new.committer) {
        fields.insert(MetadataField::Committer);
    }
    if old.committer.time != new.committer.time {
        fields.insert(MetadataField::CommitterDate);
    }
    if old.message != new.message {
        fields.insert(MetadataField::Message);
    }
    if old.extra_headers != new.extra_headers || old.parents != new.parents || fields.is_empty() {
        fields.insert(MetadataField::Other);
    }
    Ok(fields)
}

/// The commits of one branch that are new in `s2`, with their child links.
#[derive(Debug, Clone, Default)]
pub struct BranchView {
    pub new_commits: HashSet<ObjectId>,
    children: HashMap<ObjectId, Vec<ObjectId>>,
    /// New commits with no parents at all.
    new_roots: Vec<ObjectId>,
}

impl BranchView {
    /// Commits reachable from `s2[branch]` (all of `s2` when the branch
    /// vanished) but not from `s1[branch]`.
    pub fn new<R: RepositoryReader + ?Sized>(
        reader: &R,
        s1: &Snapshot,
        s2: &Snapshot,
        branch: &str,
    ) -> Result<BranchView> {
        let after = match s2.refs.get(branch) {
            Some(tip) => reachable_set(reader, [*tip])?,
            None => snapshot_reachable(reader, s2)?,
        };
        let before = match s1.refs.get(branch) {
            Some(tip) => reachable_set(reader, [*tip])?,
            None => HashSet::new(),
        };
        let new_commits = after.difference(&before).copied().collect();
        BranchView::from_commits(reader, new_commits)
    }

    pub fn from_commits<R: RepositoryReader + ?Sized>(
        reader: &R,
        new_commits: HashSet<ObjectId>,
    ) -> Result<BranchView> {
        let mut children: HashMap<ObjectId, Vec<ObjectId>> = HashMap::new();
        let mut new_roots = Vec::new();
        for id in &new_commits {
            let commit = reader.commit(id)?;
            if commit.parents.is_empty() {
                new_roots.push(*id);
            }
            for parent in &commit.parents {
                children.entry(*parent).or_default().push(*id);
            }
        }
        for list in children.values_mut() {
            list.sort();
        }
        new_roots.sort();
        Ok(BranchView {
            new_commits,
            children,
            new_roots,
        })
    }

    fn children_of(&self, id: &ObjectId) -> &[ObjectId] {
        self.children.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// New children of the root's parents; for a parentless root, the new
    /// parentless commits. Sorted, duplicate free.
    pub fn frontier(&self, root: &CommitRecord) -> Vec<ObjectId> {
        if root.parents.is_empty() {
            return self.new_roots.clone();
        }
        let set: BTreeSet<ObjectId> = root
            .parents
            .iter()
            .flat_map(|p| self.children_of(p).iter().copied())
            .filter(|c| *c != root.id)
            .collect();
        set.into_iter().collect()
    }
}

/// Replacement with the same tree as `root`, if any. Ties go to the
/// candidate with the fewest differing fields, then the smaller id.
pub fn find_replacement_candidate<R: RepositoryReader + ?Sized>(
    root: &ObjectId,
    view: &BranchView,
    reader: &R,
) -> Result<Option<ObjectId>> {
    let old = reader.commit(root)?;
    let mut best: Option<(usize, ObjectId)> = None;
    for id in view.frontier(&old) {
        let candidate = reader.commit(&id)?;
        if candidate.tree != old.tree {
            continue;
        }
        let score = (diff_metadata(&old, &candidate)?.len(), id);
        if best.is_none_or(|b| score < b) {
            best = Some(score);
        }
    }
    Ok(best.map(|(_, id)| id))
}

/// Result of the bounded descendant search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileTracking {
    pub fates: Vec<FileFate>,
    pub flags: DirFlags,
    /// Every visited commit with its generation, in visit order.
    pub visited: Vec<(ObjectId, u32)>,
}

/// Follows the files changed by `root` through the new history, breadth
/// first from the frontier, for at most `max_depth` generations.
pub fn track_files<R: RepositoryReader + ?Sized>(
    root: &ObjectId,
    view: &BranchView,
    reader: &R,
    max_depth: u32,
) -> Result<FileTracking> {
    let old = reader.commit(root)?;
    let tracked: Vec<(String, ObjectId)> = changed_paths(reader, root)?
        .into_iter()
        .filter(|c| matches!(c.kind, ChangeKind::Added | ChangeKind::Modified))
        .filter_map(|c| c.new_content_id().map(|id| (c.path, id)))
        .collect();

    let mut visited: Vec<(ObjectId, u32)> = Vec::new();
    let mut seen: HashSet<ObjectId> = HashSet::new();
    let mut queue: VecDeque<(ObjectId, u32)> = VecDeque::new();
    if max_depth >= 1 {
        for id in view.frontier(&old) {
            if seen.insert(id) {
                queue.push_back((id, 1));
            }
        }
    }
    while let Some((id, generation)) = queue.pop_front() {
        visited.push((id, generation));
        if generation == max_depth {
            continue;
        }
        for child in view.children_of(&id) {
            if seen.insert(*child) {
                queue.push_back((*child, generation + 1));
            }
        }
    }

    let mut manifests: Vec<(ObjectId, u32, Arc<Manifest>)> = Vec::with_capacity(visited.len());
    let mut by_tree: HashMap<ObjectId, Arc<Manifest>> = HashMap::new();
    for (id, generation) in &visited {
        let commit = reader.commit(id)?;
        let manifest = match by_tree.get(&commit.tree) {
            Some(m) => m.clone(),
            None => {
                let m = Arc::new(full_tree_manifest(reader, id)?);
                by_tree.insert(commit.tree, m.clone());
                m
            }
        };
        manifests.push((*id, *generation, manifest));
    }
    let deepest = visited.iter().map(|(_, g)| *g).max().unwrap_or(0);

    let mut fates = Vec::with_capacity(tracked.len());
    for (path, content_id) in &tracked {
        let identical = manifests
            .iter()
            .find(|(_, _, m)| m.contains(path, content_id));
        let fate = if let Some((id, generation, _)) = identical {
            FileFate {
                path: path.clone(),
                content_id: *content_id,
                outcome: Outcome::FoundIdentical,
                found_in: Some(*id),
                depth: *generation,
            }
        } else if let Some((id, generation, _)) =
            manifests.iter().find(|(_, _, m)| m.get(path).is_some())
        {
            FileFate {
                path: path.clone(),
                content_id: *content_id,
                outcome: Outcome::Modified,
                found_in: Some(*id),
                depth: *generation,
            }
        } else {
            FileFate {
                path: path.clone(),
                content_id: *content_id,
                outcome: Outcome::Removed,
                found_in: None,
                depth: deepest,
            }
        };
        fates.push(fate);
    }

    let mut flags = DirFlags {
        content_split: false,
        file_modified: fates.iter().any(|f| f.outcome == Outcome::Modified),
        file_removed: fates.iter().any(|f| f.outcome == Outcome::Removed),
    };
    let all_found = !fates.is_empty() && fates.iter().all(|f| f.outcome == Outcome::FoundIdentical);
    if all_found && is_split(reader, &tracked, &visited)? {
        flags.content_split = true;
        for fate in &mut fates {
            fate.outcome = Outcome::Split;
        }
    }
    if !flags.is_valid() {
        // content survived intact but the tree still differs
        if visited.is_empty() {
            flags.file_removed = true;
        } else {
            flags.file_modified = true;
        }
    }
    Ok(FileTracking {
        fates,
        flags,
        visited,
    })
}

/// Every tracked (path, content) pair is introduced by some visited commit,
/// and no single visited commit introduces all of them.
fn is_split<R: RepositoryReader + ?Sized>(
    reader: &R,
    tracked: &[(String, ObjectId)],
    visited: &[(ObjectId, u32)],
) -> Result<bool> {
    if tracked.len() < 2 {
        return Ok(false);
    }
    let mut covered = vec![false; tracked.len()];
    for (id, _) in visited {
        let introduced: HashSet<(String, ObjectId)> = changed_paths(reader, id)?
            .into_iter()
            .filter_map(|c| c.new_content_id().map(|content| (c.path, content)))
            .collect();
        let mut all = true;
        for (i, pair) in tracked.iter().enumerate() {
            if introduced.contains(pair) {
                covered[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            return Ok(false);
        }
    }
    Ok(covered.iter().all(|c| *c))
}

/// Categorizes every root cause of one alteration.
pub struct Categorizer<'a, R: RepositoryReader + ?Sized> {
    reader: &'a R,
    s2_reachable: HashSet<ObjectId>,
    max_depth: u32,
}

impl<'a, R: RepositoryReader + ?Sized> Categorizer<'a, R> {
    pub fn new(reader: &'a R, s2: &Snapshot) -> Result<Self> {
        Ok(Categorizer {
            reader,
            s2_reachable: snapshot_reachable(reader, s2)?,
            max_depth: MAX_DEPTH,
        })
    }

    pub fn with_max_depth(mut self, max_depth: u32) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn categorize_root(&self, root: &ObjectId, view: &BranchView) -> Result<Category> {
        if self.s2_reachable.contains(root) {
            return Ok(Category::DifferentBranchName);
        }
        if let Some(candidate) = find_replacement_candidate(root, view, self.reader)? {
            let old = self.reader.commit(root)?;
            let new = self.reader.commit(&candidate)?;
            return Ok(Category::Meta {
                fields: diff_metadata(&old, &new)?,
            });
        }
        let tracking = track_files(root, view, self.reader, self.max_depth)?;
        Ok(Category::Dir {
            flags: tracking.flags,
            file_fates: tracking.fates,
        })
    }

    /// Categories for each root cause, in root cause order.
    pub fn categorize_alteration(
        &self,
        alteration: &BranchAlteration,
        s1: &Snapshot,
        s2: &Snapshot,
    ) -> Result<Vec<(ObjectId, Category)>> {
        let view = BranchView::new(self.reader, s1, s2, &alteration.branch.raw_name)?;
        alteration
            .root_causes
            .iter()
            .map(|root| Ok((*root, self.categorize_root(root, &view)?)))
            .collect()
    }
}

/// One-shot categorization of a single root cause.
pub fn categorize<R: RepositoryReader + ?Sized>(
    root: &ObjectId,
    alteration: &BranchAlteration,
    s1: &Snapshot,
    s2: &Snapshot,
    reader: &R,
) -> Result<Category> {
    let categorizer = Categorizer::new(reader, s2)?;
    let view = BranchView::new(reader, s1, s2, &alteration.branch.raw_name)?;
    categorizer.categorize_root(root, &view)
}
