//! Rendering of check results and aggregate distributions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::db::{BranchFilter, StoredAlteration};
use crate::origin::report_name;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportFile {
    pub path: String,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub branch_name: String,
    pub unified_branch: String,
    pub altered_commit: String,
    pub snapshot_from: String,
    pub snapshot_destination: String,
    pub category: String,
    pub sub_category: String,
    pub files: Vec<ReportFile>,
}

impl From<&StoredAlteration> for ReportRecord {
    fn from(a: &StoredAlteration) -> Self {
        ReportRecord {
            branch_name: a.raw_branch.clone(),
            unified_branch: a.unified_branch.clone(),
            altered_commit: a.altered_commit.to_hex(),
            snapshot_from: a.snapshot_from.clone(),
            snapshot_destination: a.snapshot_to.clone(),
            category: a.category.clone(),
            sub_category: a.sub_category.clone(),
            files: a
                .files
                .iter()
                .map(|f| ReportFile {
                    path: f.file_path.clone(),
                    status: f.status.clone(),
                })
                .collect(),
        }
    }
}

/// Result of auditing one origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub origin: String,
    pub branch: BranchFilter,
    pub records: Vec<ReportRecord>,
}

impl CheckReport {
    pub fn new(origin: &str, branch: BranchFilter, rows: &[StoredAlteration]) -> CheckReport {
        CheckReport {
            origin: origin.to_string(),
            branch,
            records: rows.iter().map(ReportRecord::from).collect(),
        }
    }

    /// Canonical serialization; equal reports give equal strings.
    pub fn to_payload(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn from_payload(payload: &str) -> Option<CheckReport> {
        serde_json::from_str(payload).ok()
    }

    pub fn records_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&self.records).expect("records serialize");
        out.push('\n');
        out
    }

    /// "Found N ..." line plus, when `verbose`, the record and file blocks.
    pub fn render_body(&self, verbose: bool) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Found {} altered history records for '{}'",
            self.records.len(),
            self.origin
        );
        if !verbose || self.records.is_empty() {
            return out;
        }
        out.push_str("\nAltered History Records:\n");
        for (i, record) in self.records.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "Record #{}:", i + 1);
            let _ = writeln!(out, "  Branch Name: {}", record.branch_name);
            let _ = writeln!(out, "  Altered Commit: {}", truncate(&record.altered_commit, 15));
            let _ = writeln!(
                out,
                "  Snapshot Destination: {}",
                truncate(&record.snapshot_destination, 8)
            );
            let _ = writeln!(out, "  Sub Category: {}", record.sub_category);
        }
        if self.records.iter().any(|r| !r.files.is_empty()) {
            out.push_str("\nFile Modifications:\n");
            let mut first = true;
            for (i, record) in self.records.iter().enumerate() {
                for file in &record.files {
                    if !first {
                        out.push('\n');
                    }
                    first = false;
                    let _ = writeln!(out, "Record #{}:", i + 1);
                    let _ = writeln!(out, "  Branch Name: {}", record.branch_name);
                    let _ = writeln!(out, "  Altered Commit: {}", truncate(&record.altered_commit, 15));
                    let _ = writeln!(out, "  File Path: {}", file.path);
                    let _ = writeln!(out, "  Status: {}", file.status);
                }
            }
        }
        out
    }

    /// Full console output of `check` in text mode.
    pub fn render_text(&self, verbose: bool, saved_dir: &str, saved_name: &str) -> String {
        let mut out = String::from("Connected to the database!\n");
        out.push_str(&self.render_body(verbose));
        out.push('\n');
        out.push_str(&saved_lines(saved_dir, saved_name));
        out
    }
}

pub fn saved_lines(saved_dir: &str, saved_name: &str) -> String {
    let dir = if saved_dir.ends_with('/') {
        saved_dir.to_string()
    } else {
        format!("{saved_dir}/")
    };
    format!("Results saved to: {dir}\n  {saved_name}\n")
}

fn truncate(text: &str, len: usize) -> String {
    match text.char_indices().nth(len) {
        Some((cut, _)) => format!("{}...", &text[..cut]),
        None => text.to_string(),
    }
}

/// `altered_history_<name>_<YYYYMMDD_HHMMSS>.txt`
pub fn report_file_name(origin: &str, at: NaiveDateTime) -> String {
    format!(
        "altered_history_{}_{}.txt",
        report_name(origin),
        at.format("%Y%m%d_%H%M%S")
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub group: String,
    pub count: usize,
    pub percent: f64,
}

/// Share of each key, largest first, ties by name.
pub fn distribution<I, S>(keys: I) -> Vec<GroupRow>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut total = 0usize;
    for key in keys {
        *counts.entry(key.into()).or_default() += 1;
        total += 1;
    }
    let mut rows: Vec<GroupRow> = counts
        .into_iter()
        .map(|(group, count)| GroupRow {
            group,
            count,
            percent: 100.0 * count as f64 / total as f64,
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then(a.group.cmp(&b.group)));
    rows
}

pub fn render_distribution(title: &str, rows: &[GroupRow]) -> String {
    if rows.is_empty() {
        return "no records\n".to_string();
    }
    let width = rows
        .iter()
        .map(|r| r.group.len())
        .chain([title.len()])
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "{title:<width$}  {:>8}  {:>8}", "count", "percent");
    for row in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>8}  {:>7.2}%",
            row.group, row.count, row.percent
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CheckReport {
        CheckReport {
            origin: "https://github.com/example/project".into(),
            branch: BranchFilter::All,
            records: vec![
                ReportRecord {
                    branch_name: "refs/heads/master".into(),
                    unified_branch: "main".into(),
                    altered_commit: "a1b2c3d4e5f6789".to_string() + &"0".repeat(25),
                    snapshot_from: "s".into(),
                    snapshot_destination: "abcd1234bbbb".into(),
                    category: "Dir".into(),
                    sub_category: "FileModified".into(),
                    files: vec![ReportFile {
                        path: "src/security/auth.py".into(),
                        status: "Modified".into(),
                    }],
                },
                ReportRecord {
                    branch_name: "refs/heads/dev".into(),
                    unified_branch: "development".into(),
                    altered_commit: "f6e5d4c3b2a1098".to_string() + &"0".repeat(25),
                    snapshot_from: "s".into(),
                    snapshot_destination: "efgh5678aaaa".into(),
                    category: "Meta".into(),
                    sub_category: "CommitterDate".into(),
                    files: vec![],
                },
            ],
        }
    }

    #[test]
    fn verbose_layout() {
        let text = sample().render_text(true, "/state", "altered_history_example_project_20241201_143022.txt");
        let expected = "\
Connected to the database!
Found 2 altered history records for 'https://github.com/example/project'

Altered History Records:
Record #1:
  Branch Name: refs/heads/master
  Altered Commit: a1b2c3d4e5f6789...
  Snapshot Destination: abcd1234...
  Sub Category: FileModified

Record #2:
  Branch Name: refs/heads/dev
  Altered Commit: f6e5d4c3b2a1098...
  Snapshot Destination: efgh5678...
  Sub Category: CommitterDate

File Modifications:
Record #1:
  Branch Name: refs/heads/master
  Altered Commit: a1b2c3d4e5f6789...
  File Path: src/security/auth.py
  Status: Modified

Results saved to: /state/
  altered_history_example_project_20241201_143022.txt
";
        assert_eq!(text, expected);
    }

    #[test]
    fn payload_round_trip() {
        let report = sample();
        assert_eq!(CheckReport::from_payload(&report.to_payload()).unwrap(), report);
    }

    #[test]
    fn file_name() {
        let at = NaiveDateTime::parse_from_str("2024-12-01 14:30:22", "%Y-%m-%d %H:%M:%S").unwrap();
        assert_eq!(
            report_file_name("https://github.com/example/project", at),
            "altered_history_example_project_20241201_143022.txt"
        );
    }

    #[test]
    fn distribution_sorted() {
        let rows = distribution(["a", "b", "b", "c", "b", "a"]);
        let groups: Vec<_> = rows.iter().map(|r| (r.group.as_str(), r.count)).collect();
        assert_eq!(groups, [("b", 3), ("a", 2), ("c", 1)]);
        assert!((rows[0].percent - 50.0).abs() < 1e-9);
        assert_eq!(render_distribution("x", &[]), "no records\n");
    }
}
