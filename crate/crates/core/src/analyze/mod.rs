//! Case studies over categorized alterations: removed secrets and
//! retroactive license changes.

pub mod license;
pub mod secrets;

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::categorize::{Category, Outcome};
use crate::dataset::AlterationRecord;
use crate::detect::UnifiedName;
use crate::model::ObjectId;
use crate::odb::{full_tree_manifest, RepositoryReader};

pub use license::{
    classify_license_change, detect_licenses, is_license_filename, ChangeClass, LicenseClassifier,
    LicenseFamily, LicenseId, TemplateClassifier,
};
pub use secrets::{
    detect_private_key_content, is_secret_filename, PatternKind, SecretPattern, SecretPatterns,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Via {
    Filename,
    Content,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SecretFinding {
    pub origin: String,
    pub branch: String,
    pub root_cause: ObjectId,
    pub path: String,
    pub matched: SecretPattern,
    pub via: Via,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LicenseFinding {
    pub origin: String,
    pub branch: String,
    pub root_cause: ObjectId,
    pub path: String,
    pub before: BTreeSet<LicenseId>,
    pub after: BTreeSet<LicenseId>,
    pub change_class: ChangeClass,
}

fn basename(path: &str) -> &str {
    path.rsplit('/').next().unwrap_or(path)
}

/// Secrets among the files a rewrite removed. The removed blob is still in
/// the archive in the normal case, so its content is checked as well.
pub fn scan_secret_removals<'a, R, I>(
    records: I,
    reader: &R,
    patterns: &SecretPatterns,
) -> Vec<SecretFinding>
where
    R: RepositoryReader + ?Sized,
    I: IntoIterator<Item = &'a AlterationRecord>,
{
    let mut out = Vec::new();
    for record in records {
        for root in &record.root_causes {
            let Category::Dir { file_fates, .. } = &root.category else {
                continue;
            };
            let mut emitted: HashSet<(&str, SecretPattern)> = HashSet::new();
            for fate in file_fates.iter().filter(|f| f.outcome == Outcome::Removed) {
                let mut hits = Vec::new();
                if let Some(pattern) = patterns.match_filename(basename(&fate.path)) {
                    hits.push((pattern.clone(), Via::Filename));
                }
                if let Ok(content) = reader.blob(&fate.content_id) {
                    if let Some(pattern) = patterns.match_content(&content) {
                        hits.push((pattern.clone(), Via::Content));
                    }
                }
                for (pattern, via) in hits {
                    if emitted.insert((fate.path.as_str(), pattern.clone())) {
                        out.push(SecretFinding {
                            origin: record.origin.clone(),
                            branch: record.branch.raw_name.clone(),
                            root_cause: root.commit,
                            path: fate.path.clone(),
                            matched: pattern,
                            via,
                        });
                    }
                }
            }
        }
    }
    out
}

/// License files a rewrite modified, with the licenses before and after.
/// Only unified main branches are considered unless `all_branches`.
pub fn scan_license_changes<'a, R, C, I>(
    records: I,
    reader: &R,
    classifier: &C,
    all_branches: bool,
) -> Vec<LicenseFinding>
where
    R: RepositoryReader + ?Sized,
    C: LicenseClassifier + ?Sized,
    I: IntoIterator<Item = &'a AlterationRecord>,
{
    let mut out = Vec::new();
    for record in records {
        if !all_branches && record.branch.unified != UnifiedName::Main {
            continue;
        }
        for root in &record.root_causes {
            let Category::Dir { file_fates, .. } = &root.category else {
                continue;
            };
            for fate in file_fates {
                if fate.outcome != Outcome::Modified || !is_license_filename(basename(&fate.path)) {
                    continue;
                }
                let Some(found_in) = fate.found_in else { continue };
                let before = match reader.blob(&fate.content_id) {
                    Ok(bytes) => classifier.detect(&bytes),
                    Err(_) => BTreeSet::new(),
                };
                let after = full_tree_manifest(reader, &found_in)
                    .ok()
                    .and_then(|m| m.get(&fate.path).map(|e| e.content_id))
                    .and_then(|id| reader.blob(&id).ok())
                    .map(|bytes| classifier.detect(&bytes))
                    .unwrap_or_default();
                let change_class = classify_license_change(&before, &after);
                out.push(LicenseFinding {
                    origin: record.origin.clone(),
                    branch: record.branch.raw_name.clone(),
                    root_cause: root.commit,
                    path: fate.path.clone(),
                    before,
                    after,
                    change_class,
                });
            }
        }
    }
    out
}
