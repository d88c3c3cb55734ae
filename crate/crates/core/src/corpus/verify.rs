use std::collections::{BTreeMap, BTreeSet};

use crate::analyze::{scan_license_changes, scan_secret_removals, SecretPatterns, TemplateClassifier};
use crate::dataset::analyze_pair;
use crate::error::Result;
use crate::model::ObjectId;
use crate::snapshot::{list_snapshot_pairs, OriginArchive};

use super::{oracle_detect, CategoryLabel, ExpectedFindings, GroundTruth};

/// Runs the full pipeline on a generated archive and lists every way its
/// output differs from the ground truth or the oracle. Empty means the
/// three agree.
pub fn verify_scenario(archive: &OriginArchive, truth: &GroundTruth) -> Result<Vec<String>> {
    let mut problems = Vec::new();
    let reader = archive.reader()?;
    let mut records = Vec::new();
    for (s1, s2) in list_snapshot_pairs(archive)? {
        records.extend(analyze_pair(s1, s2, &reader)?);
    }
    let oracle = oracle_detect(archive)?;

    let altered: BTreeSet<ObjectId> = records.iter().flat_map(|r| r.altered.iter().copied()).collect();
    let roots: BTreeSet<ObjectId> = records
        .iter()
        .flat_map(|r| r.root_causes.iter().map(|c| c.commit))
        .collect();
    let categories: BTreeMap<ObjectId, CategoryLabel> = records
        .iter()
        .flat_map(|r| r.root_causes.iter().map(|c| (c.commit, CategoryLabel::from(&c.category))))
        .collect();
    let branches: BTreeSet<&str> = records.iter().map(|r| r.branch.raw_name.as_str()).collect();
    let expected_branches: BTreeSet<&str> = truth.branch.as_deref().into_iter().collect();

    if altered != truth.expected_altered {
        problems.push(format!(
            "altered: detector {} commits, truth {}",
            altered.len(),
            truth.expected_altered.len()
        ));
    }
    if oracle.altered() != truth.expected_altered {
        problems.push(format!(
            "altered: oracle {} commits, truth {}",
            oracle.altered().len(),
            truth.expected_altered.len()
        ));
    }
    if roots != truth.expected_root_causes {
        problems.push(format!("root causes: detector {roots:?}, truth {:?}", truth.expected_root_causes));
    }
    if oracle.root_causes() != truth.expected_root_causes {
        problems.push(format!(
            "root causes: oracle {:?}, truth {:?}",
            oracle.root_causes(),
            truth.expected_root_causes
        ));
    }
    if branches != expected_branches {
        problems.push(format!("branches: detector {branches:?}, truth {expected_branches:?}"));
    }
    let oracle_branches: BTreeSet<&str> = oracle.branches.keys().map(String::as_str).collect();
    if oracle_branches != expected_branches {
        problems.push(format!("branches: oracle {oracle_branches:?}, truth {expected_branches:?}"));
    }
    if categories != truth.expected_categories {
        problems.push(format!(
            "categories: detector {categories:?}, truth {:?}",
            truth.expected_categories
        ));
    }

    match &truth.expected_findings {
        Some(ExpectedFindings::Secrets { paths, decoys }) => {
            let findings = scan_secret_removals(&records, &reader, SecretPatterns::builtin());
            let mut found: Vec<&str> = findings.iter().map(|f| f.path.as_str()).collect();
            found.sort_unstable();
            let mut wanted: Vec<&str> = paths.iter().map(String::as_str).collect();
            wanted.sort_unstable();
            if found != wanted {
                problems.push(format!("secrets: found {found:?}, planted {wanted:?}"));
            }
            for decoy in decoys {
                if found.contains(&decoy.as_str()) {
                    problems.push(format!("secrets: decoy {decoy} reported"));
                }
            }
        }
        Some(ExpectedFindings::License { path, change_class }) => {
            let findings = scan_license_changes(&records, &reader, TemplateClassifier::builtin(), false);
            let got: Vec<_> = findings.iter().map(|f| (f.path.as_str(), f.change_class)).collect();
            if got != [(path.as_str(), *change_class)] {
                problems.push(format!("license: got {got:?}, expected {path} {change_class:?}"));
            }
        }
        None => {}
    }
    Ok(problems)
}
