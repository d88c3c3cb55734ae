//! Per-branch alteration detection between two snapshots of one origin.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{ObjectId, Snapshot};
use crate::odb::RepositoryReader;

/// Canonical purpose class of a branch, used for aggregation only.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnifiedName {
    Main,
    Development,
    PullRequest,
    Renovate,
    Other(String),
}

impl UnifiedName {
    /// Short stable label: `main`, `development`, `pull_request`,
    /// `renovate`, or the stripped branch name.
    pub fn label(&self) -> &str {
        match self {
            UnifiedName::Main => "main",
            UnifiedName::Development => "development",
            UnifiedName::PullRequest => "pull_request",
            UnifiedName::Renovate => "renovate",
            UnifiedName::Other(name) => name,
        }
    }
}

impl fmt::Display for UnifiedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UnifiedBranch {
    pub raw_name: String,
    pub unified: UnifiedName,
}

pub fn unify_branch_name(ref_name: &str) -> UnifiedBranch {
    let stripped = ref_name.strip_prefix("refs/heads/").unwrap_or(ref_name);
    let unified = match stripped {
        "main" | "master" => UnifiedName::Main,
        "dev" | "devel" | "develop" | "development" => UnifiedName::Development,
        _ if is_pull_ref(ref_name) || is_pull_ref(stripped) => UnifiedName::PullRequest,
        _ if stripped.starts_with("renovate/") => UnifiedName::Renovate,
        _ => UnifiedName::Other(stripped.to_string()),
    };
    UnifiedBranch {
        raw_name: ref_name.to_string(),
        unified,
    }
}

fn is_pull_ref(name: &str) -> bool {
    let rest = name
        .strip_prefix("refs/pull/")
        .or_else(|| name.strip_prefix("pull/"));
    match rest.and_then(|r| r.strip_suffix("/head")) {
        Some(number) => !number.is_empty() && number.bytes().all(|b| b.is_ascii_digit()),
        None => false,
    }
}

/// Alteration of one branch between two consecutive snapshots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchAlteration {
    pub origin: String,
    pub branch: UnifiedBranch,
    pub snapshot_from: String,
    pub snapshot_to: String,
    pub altered: BTreeSet<ObjectId>,
    pub root_causes: BTreeSet<ObjectId>,
}

/// Every commit reachable from `tips`, tips included.
pub fn reachable_set<R, I>(reader: &R, tips: I) -> Result<HashSet<ObjectId>>
where
    R: RepositoryReader + ?Sized,
    I: IntoIterator<Item = ObjectId>,
{
    let mut seen = HashSet::new();
    let mut stack: Vec<ObjectId> = Vec::new();
    for tip in tips {
        if seen.insert(tip) {
            stack.push(tip);
        }
    }
    while let Some(id) = stack.pop() {
        let commit = reader.commit(&id)?;
        for parent in &commit.parents {
            if seen.insert(*parent) {
                stack.push(*parent);
            }
        }
    }
    Ok(seen)
}

/// Commits reachable from any branch of the snapshot.
pub fn snapshot_reachable<R: RepositoryReader + ?Sized>(
    reader: &R,
    snapshot: &Snapshot,
) -> Result<HashSet<ObjectId>> {
    reachable_set(reader, snapshot.branches().map(|(_, id)| *id))
}

/// Members of `altered` none of whose parents are in `altered`.
pub fn find_root_causes<R: RepositoryReader + ?Sized>(
    altered: &BTreeSet<ObjectId>,
    reader: &R,
) -> Result<BTreeSet<ObjectId>> {
    let mut roots = BTreeSet::new();
    for id in altered {
        let commit = reader.commit(id)?;
        if !commit.parents.iter().any(|p| altered.contains(p)) {
            roots.insert(*id);
        }
    }
    Ok(roots)
}

/// Compares each branch of `s1` with the same raw ref in `s2`. A branch
/// missing from `s2` loses everything it reached.
pub fn detect_branch_alterations<R: RepositoryReader + ?Sized>(
    s1: &Snapshot,
    s2: &Snapshot,
    reader: &R,
) -> Result<Vec<BranchAlteration>> {
    let mut out = Vec::new();
    for (name, tip) in s1.branches() {
        if s2.refs.get(name) == Some(tip) {
            continue;
        }
        let before = reachable_set(reader, [*tip])?;
        let after = match s2.refs.get(name) {
            Some(new_tip) => reachable_set(reader, [*new_tip])?,
            None => HashSet::new(),
        };
        let altered: BTreeSet<ObjectId> = before.difference(&after).copied().collect();
        if altered.is_empty() {
            continue;
        }
        let root_causes = find_root_causes(&altered, reader)?;
        out.push(BranchAlteration {
            origin: s1.origin.clone(),
            branch: unify_branch_name(name),
            snapshot_from: s1.snapshot_id.clone(),
            snapshot_to: s2.snapshot_id.clone(),
            altered,
            root_causes,
        });
    }
    Ok(out)
}
