//! Alteration records: the in-memory pipeline result and its flat
//! newline-delimited JSON form.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::categorize::{dir_sub_category, Category, Categorizer, DirFlags, MetadataField};
use crate::detect::{detect_branch_alterations, unify_branch_name, UnifiedBranch};
use crate::error::{Error, Result};
use crate::model::{ObjectId, Snapshot};
use crate::odb::RepositoryReader;

/// A root cause and its category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategorizedRoot {
    pub commit: ObjectId,
    pub category: Category,
}

/// One detected (origin, branch, snapshot pair) alteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlterationRecord {
    pub origin: String,
    pub branch: UnifiedBranch,
    pub snapshot_from: String,
    pub snapshot_to: String,
    pub altered: BTreeSet<ObjectId>,
    pub root_causes: Vec<CategorizedRoot>,
}

impl AlterationRecord {
    /// Flat rows, one per root cause.
    pub fn rows(&self) -> Vec<DatasetRecord> {
        self.root_causes
            .iter()
            .map(|root| DatasetRecord {
                origin: self.origin.clone(),
                raw_branch: self.branch.raw_name.clone(),
                altered_commit: root.commit,
                snapshot_from: self.snapshot_from.clone(),
                snapshot_to: self.snapshot_to.clone(),
                category: root.category.tag().to_string(),
                sub_category: root.category.sub_category(),
                files: match &root.category {
                    Category::Dir { file_fates, .. } => file_fates
                        .iter()
                        .map(|f| FileStatus {
                            path: f.path.clone(),
                            status: f.outcome.status().to_string(),
                        })
                        .collect(),
                    _ => Vec::new(),
                },
            })
            .collect()
    }
}

/// Detects and categorizes every alteration between two snapshots.
pub fn analyze_pair<R: RepositoryReader + ?Sized>(
    s1: &Snapshot,
    s2: &Snapshot,
    reader: &R,
) -> Result<Vec<AlterationRecord>> {
    let alterations = detect_branch_alterations(s1, s2, reader)?;
    if alterations.is_empty() {
        return Ok(Vec::new());
    }
    let categorizer = Categorizer::new(reader, s2)?;
    let mut out = Vec::with_capacity(alterations.len());
    for alteration in alterations {
        let root_causes = categorizer
            .categorize_alteration(&alteration, s1, s2)?
            .into_iter()
            .map(|(commit, category)| CategorizedRoot { commit, category })
            .collect();
        out.push(AlterationRecord {
            origin: alteration.origin,
            branch: alteration.branch,
            snapshot_from: alteration.snapshot_from,
            snapshot_to: alteration.snapshot_to,
            altered: alteration.altered,
            root_causes,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileStatus {
    pub path: String,
    pub status: String,
}

pub const FILE_STATUSES: [&str; 4] = ["Modified", "Removed", "Split", "Found"];

/// One line of the alteration dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub origin: String,
    pub raw_branch: String,
    pub altered_commit: ObjectId,
    pub snapshot_from: String,
    pub snapshot_to: String,
    pub category: String,
    pub sub_category: String,
    #[serde(default)]
    pub files: Vec<FileStatus>,
}

impl DatasetRecord {
    pub fn unified_branch(&self) -> UnifiedBranch {
        unify_branch_name(&self.raw_branch)
    }

    /// Checks tag values and their mutual consistency.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.origin.is_empty() {
            return Err("empty origin".into());
        }
        if self.raw_branch.is_empty() {
            return Err("empty raw_branch".into());
        }
        if self.snapshot_to.is_empty() {
            return Err("empty snapshot_to".into());
        }
        match self.category.as_str() {
            "DifferentBranchName" => {
                if self.sub_category != "DifferentBranchName" {
                    return Err(format!("sub_category {:?} under DifferentBranchName", self.sub_category));
                }
            }
            "Meta" => {
                for part in self.sub_category.split(',') {
                    if MetadataField::from_name(part).is_none() {
                        return Err(format!("sub_category {part:?} not valid under Meta"));
                    }
                }
            }
            "Dir" => {
                let mut flags = DirFlags::default();
                for part in self.sub_category.split(',') {
                    match part {
                        "ContentSplit" => flags.content_split = true,
                        "FileModified" => flags.file_modified = true,
                        "FileRemoved" => flags.file_removed = true,
                        _ => return Err(format!("sub_category {part:?} not valid under Dir")),
                    }
                }
                if !flags.is_valid() {
                    return Err(format!("inconsistent Dir sub_category {:?}", self.sub_category));
                }
                if dir_sub_category(&flags) != self.sub_category {
                    return Err(format!("non-canonical sub_category {:?}", self.sub_category));
                }
            }
            other => return Err(format!("unknown category {other:?}")),
        }
        if self.category != "Dir" && !self.files.is_empty() {
            return Err("file entries on a non-Dir record".into());
        }
        for file in &self.files {
            if file.path.is_empty() {
                return Err("empty file path".into());
            }
            if !FILE_STATUSES.contains(&file.status.as_str()) {
                return Err(format!("unknown file status {:?}", file.status));
            }
        }
        Ok(())
    }
}

/// Parses one dataset line.
pub fn parse_record(line: &str) -> std::result::Result<DatasetRecord, String> {
    let record: DatasetRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    record.validate()?;
    Ok(record)
}

/// Reads a whole dataset, failing on the first bad line.
pub fn read_records<R: BufRead>(input: R) -> Result<Vec<DatasetRecord>> {
    let mut out = Vec::new();
    for (index, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::MalformedRecord {
            line: index + 1,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_record(&line).map_err(|reason| Error::MalformedRecord {
            line: index + 1,
            reason,
        })?);
    }
    Ok(out)
}

pub fn write_records<W: Write>(mut out: W, records: &[DatasetRecord]) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
