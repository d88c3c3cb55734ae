//! Embedded alteration store and query layer.

mod cache;

use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use rayon::prelude::*;
use rusqlite::{params, Connection, OptionalExtension};
use serde::{Deserialize, Serialize};

use crate::dataset::{parse_record, DatasetRecord, FileStatus};
use crate::detect::{unify_branch_name, UnifiedName};
use crate::error::{Error, Result};
use crate::model::ObjectId;

pub use cache::{Cache, CachedCheck};

/// Lines parsed in parallel before being written in one transaction.
const BATCH: usize = 8192;

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS alterations (
    id              INTEGER PRIMARY KEY,
    origin          TEXT NOT NULL,
    raw_branch      TEXT NOT NULL,
    unified_branch  TEXT NOT NULL,
    altered_commit  TEXT NOT NULL,
    snapshot_from   TEXT NOT NULL,
    snapshot_to     TEXT NOT NULL,
    category        TEXT NOT NULL CHECK (category IN ('Meta', 'Dir', 'DifferentBranchName')),
    sub_category    TEXT NOT NULL,
    recorded_at     TEXT NOT NULL,
    UNIQUE (origin, raw_branch, altered_commit, snapshot_to)
);
CREATE INDEX IF NOT EXISTS alterations_by_origin ON alterations (origin);
CREATE TABLE IF NOT EXISTS file_modifications (
    alteration_id   INTEGER NOT NULL REFERENCES alterations (id),
    file_path       TEXT NOT NULL,
    status          TEXT NOT NULL CHECK (status IN ('Modified', 'Removed', 'Split', 'Found')),
    UNIQUE (alteration_id, file_path)
);
CREATE TABLE IF NOT EXISTS meta (
    key   TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchFilter {
    Main,
    Dev,
    All,
}

impl BranchFilter {
    pub fn as_str(self) -> &'static str {
        match self {
            BranchFilter::Main => "main",
            BranchFilter::Dev => "dev",
            BranchFilter::All => "all",
        }
    }

    fn unified(self) -> Option<&'static str> {
        match self {
            BranchFilter::Main => Some("main"),
            BranchFilter::Dev => Some("development"),
            BranchFilter::All => None,
        }
    }
}

impl fmt::Display for BranchFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BranchFilter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "main" => Ok(BranchFilter::Main),
            "dev" => Ok(BranchFilter::Dev),
            "all" => Ok(BranchFilter::All),
            _ => Err(format!("unknown branch filter {s:?} (expected main, dev or all)")),
        }
    }
}

/// Stored form of a unified branch; other names keep a prefix so they can
/// never collide with a purpose class.
pub fn unified_tag(name: &UnifiedName) -> String {
    match name {
        UnifiedName::Other(branch) => format!("other:{branch}"),
        _ => name.label().to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredFileModification {
    pub file_path: String,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredAlteration {
    pub id: i64,
    pub origin: String,
    pub raw_branch: String,
    pub unified_branch: String,
    pub altered_commit: ObjectId,
    pub snapshot_from: String,
    pub snapshot_to: String,
    pub category: String,
    pub sub_category: String,
    pub recorded_at: String,
    pub files: Vec<StoredFileModification>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadSummary {
    pub inserted: usize,
    pub skipped_duplicates: usize,
    /// (line number, reason) for every rejected line.
    pub errors: Vec<(usize, String)>,
    /// Dataset version after the load.
    pub dataset_version: String,
}

pub struct Database {
    conn: Connection,
}

impl Database {
    pub fn open(path: &Path) -> Result<Database> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let conn = Connection::open(path)?;
        conn.busy_timeout(std::time::Duration::from_secs(30))?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        Database::init(conn)
    }

    pub fn open_in_memory() -> Result<Database> {
        Database::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Database> {
        conn.pragma_update(None, "foreign_keys", "ON")?;
        conn.execute_batch(SCHEMA)?;
        Ok(Database { conn })
    }

    pub fn dataset_version(&self) -> Result<Option<String>> {
        Ok(self
            .conn
            .query_row("SELECT value FROM meta WHERE key = 'dataset_version'", [], |r| r.get(0))
            .optional()?)
    }

    /// Loads a dataset stream. Bad lines are reported and skipped; the
    /// dataset version moves forward once the whole stream is stored.
    pub fn load_records<R: BufRead>(&mut self, input: R, workers: usize) -> Result<LoadSummary> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::StorageFailure(format!("worker pool: {e}")))?;
        let recorded_at = now_rfc3339();
        let mut summary = LoadSummary::default();
        let mut batch: Vec<(usize, String)> = Vec::with_capacity(BATCH);
        for (index, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::MalformedRecord {
                line: index + 1,
                reason: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            batch.push((index + 1, line));
            if batch.len() == BATCH {
                self.load_batch(&pool, &batch, &recorded_at, &mut summary)?;
                batch.clear();
            }
        }
        if !batch.is_empty() {
            self.load_batch(&pool, &batch, &recorded_at, &mut summary)?;
        }
        summary.dataset_version = self.bump_version()?;
        Ok(summary)
    }

    fn load_batch(
        &mut self,
        pool: &rayon::ThreadPool,
        lines: &[(usize, String)],
        recorded_at: &str,
        summary: &mut LoadSummary,
    ) -> Result<()> {
        let parsed: Vec<(usize, std::result::Result<DatasetRecord, String>)> = pool.install(|| {
            lines
                .par_iter()
                .map(|(n, line)| (*n, parse_record(line)))
                .collect()
        });
        let tx = self.conn.transaction()?;
        {
            let mut insert = tx.prepare_cached(
                "INSERT INTO alterations (origin, raw_branch, unified_branch, altered_commit,
                     snapshot_from, snapshot_to, category, sub_category, recorded_at)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9)
                 ON CONFLICT (origin, raw_branch, altered_commit, snapshot_to) DO NOTHING",
            )?;
            let mut insert_file = tx.prepare_cached(
                "INSERT INTO file_modifications (alteration_id, file_path, status)
                 VALUES (?1, ?2, ?3) ON CONFLICT DO NOTHING",
            )?;
            for (line, result) in parsed {
                let record = match result {
                    Ok(record) => record,
                    Err(reason) => {
                        summary.errors.push((line, reason));
                        continue;
                    }
                };
                let unified = unified_tag(&unify_branch_name(&record.raw_branch).unified);
                let changed = insert.execute(params![
                    record.origin,
                    record.raw_branch,
                    unified,
                    record.altered_commit.to_hex(),
                    record.snapshot_from,
                    record.snapshot_to,
                    record.category,
                    record.sub_category,
                    recorded_at,
                ])?;
                if changed == 0 {
                    summary.skipped_duplicates += 1;
                    continue;
                }
                let id = tx.last_insert_rowid();
                for FileStatus { path, status } in &record.files {
                    insert_file.execute(params![id, path, status])?;
                }
                summary.inserted += 1;
            }
        }
        tx.commit()?;
        Ok(())
    }

    fn bump_version(&mut self) -> Result<String> {
        let tx = self.conn.transaction()?;
        let previous: Option<String> = tx
            .query_row("SELECT value FROM meta WHERE key = 'dataset_version'", [], |r| r.get(0))
            .optional()?;
        let mut now = Utc::now();
        if let Some(prev) = previous.as_deref().and_then(|p| DateTime::parse_from_rfc3339(p).ok()) {
            let prev = prev.with_timezone(&Utc);
            if now <= prev {
                now = prev + chrono::Duration::nanoseconds(1);
            }
        }
        let version = now.to_rfc3339_opts(SecondsFormat::Nanos, true);
        tx.execute(
            "INSERT INTO meta (key, value) VALUES ('dataset_version', ?1)
             ON CONFLICT (key) DO UPDATE SET value = excluded.value",
            params![version],
        )?;
        tx.commit()?;
        Ok(version)
    }

    /// Alterations of one origin, main branches first, then development,
    /// pull requests, renovate and the rest; ties by (raw_branch,
    /// snapshot_to, altered_commit). File modifications sorted by path.
    pub fn query_by_origin(&self, origin: &str, filter: BranchFilter) -> Result<Vec<StoredAlteration>> {
        let mut stmt = self.conn.prepare_cached(
            "SELECT id, origin, raw_branch, unified_branch, altered_commit, snapshot_from,
                    snapshot_to, category, sub_category, recorded_at
             FROM alterations
             WHERE origin = ?1 AND (?2 IS NULL OR unified_branch = ?2)
             ORDER BY CASE unified_branch
                          WHEN 'main' THEN 0 WHEN 'development' THEN 1
                          WHEN 'pull_request' THEN 2 WHEN 'renovate' THEN 3 ELSE 4 END,
                      raw_branch, snapshot_to, altered_commit",
        )?;
        let rows = stmt.query_map(params![origin, filter.unified()], |r| {
            Ok((
                r.get::<_, i64>(0)?,
                r.get::<_, String>(1)?,
                r.get::<_, String>(2)?,
                r.get::<_, String>(3)?,
                r.get::<_, String>(4)?,
                r.get::<_, String>(5)?,
                r.get::<_, String>(6)?,
                r.get::<_, String>(7)?,
                r.get::<_, String>(8)?,
                r.get::<_, String>(9)?,
            ))
        })?;
        let mut out = Vec::new();
        for row in rows {
            let (id, origin, raw_branch, unified_branch, commit, from, to, category, sub, at) = row?;
            let altered_commit = commit
                .parse()
                .map_err(|_| Error::StorageFailure(format!("stored commit id {commit:?} is corrupt")))?;
            out.push(StoredAlteration {
                id,
                origin,
                raw_branch,
                unified_branch,
                altered_commit,
                snapshot_from: from,
                snapshot_to: to,
                category,
                sub_category: sub,
                recorded_at: at,
                files: self.files_of(id)?,
            });
        }
        Ok(out)
    }

    fn files_of(&self, id: i64) -> Result<Vec<StoredFileModification>> {
        let mut stmt = self.conn.prepare_cached(
            "SELECT file_path, status FROM file_modifications
             WHERE alteration_id = ?1 ORDER BY file_path",
        )?;
        let rows = stmt.query_map(params![id], |r| {
            Ok(StoredFileModification {
                file_path: r.get(0)?,
                status: r.get(1)?,
            })
        })?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    /// Every stored row, `recorded_at` excluded, in id order. Two stores
    /// holding the same data produce equal dumps.
    pub fn dump_state(&self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        let mut stmt = self.conn.prepare(
            "SELECT id, origin, raw_branch, unified_branch, altered_commit, snapshot_from,
                    snapshot_to, category, sub_category FROM alterations ORDER BY id",
        )?;
        let rows = stmt.query_map([], |r| {
            let mut fields = Vec::with_capacity(9);
            fields.push(r.get::<_, i64>(0)?.to_string());
            for i in 1..9 {
                fields.push(r.get::<_, String>(i)?);
            }
            Ok(fields.join("\t"))
        })?;
        for row in rows {
            out.push(row?);
        }
        let mut stmt = self.conn.prepare(
            "SELECT alteration_id, file_path, status FROM file_modifications
             ORDER BY alteration_id, file_path",
        )?;
        let rows = stmt.query_map([], |r| {
            Ok(format!(
                "file\t{}\t{}\t{}",
                r.get::<_, i64>(0)?,
                r.get::<_, String>(1)?,
                r.get::<_, String>(2)?
            ))
        })?;
        for row in rows {
            out.push(row?);
        }
        Ok(out)
    }

    /// File modification rows whose alteration is missing or not a Dir.
    pub fn orphaned_file_rows(&self) -> Result<usize> {
        let count: i64 = self.conn.query_row(
            "SELECT COUNT(*) FROM file_modifications f
             LEFT JOIN alterations a ON a.id = f.alteration_id
             WHERE a.id IS NULL OR a.category <> 'Dir'",
            [],
            |r| r.get(0),
        )?;
        Ok(count as usize)
    }
}

fn now_rfc3339() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Nanos, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::write_records;

    fn record(origin: &str, branch: &str, commit: char, category: &str, sub: &str) -> DatasetRecord {
        DatasetRecord {
            origin: origin.into(),
            raw_branch: branch.into(),
            altered_commit: commit.to_string().repeat(40).parse().unwrap(),
            snapshot_from: "from".into(),
            snapshot_to: "to".into(),
            category: category.into(),
            sub_category: sub.into(),
            files: if category == "Dir" {
                vec![FileStatus {
                    path: "src/security/auth.py".into(),
                    status: "Modified".into(),
                }]
            } else {
                Vec::new()
            },
        }
    }

    fn ndjson(records: &[DatasetRecord]) -> Vec<u8> {
        let mut out = Vec::new();
        write_records(&mut out, records).unwrap();
        out
    }

    const URL: &str = "https://github.com/example/project";

    fn two_records() -> Vec<u8> {
        ndjson(&[
            record(URL, "refs/heads/master", 'a', "Dir", "FileModified"),
            record(URL, "refs/heads/dev", 'f', "Meta", "CommitterDate"),
        ])
    }

    #[test]
    fn load_and_query() {
        let mut db = Database::open_in_memory().unwrap();
        let summary = db.load_records(&two_records()[..], 2).unwrap();
        assert_eq!((summary.inserted, summary.skipped_duplicates), (2, 0));
        let all = db.query_by_origin(URL, BranchFilter::All).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].raw_branch, "refs/heads/master");
        assert_eq!(all[0].files.len(), 1);
        assert_eq!(all[1].raw_branch, "refs/heads/dev");
        let main = db.query_by_origin(URL, BranchFilter::Main).unwrap();
        assert_eq!(main.len(), 1);
        assert_eq!(main[0].raw_branch, "refs/heads/master");
        assert_eq!(db.query_by_origin(URL, BranchFilter::Dev).unwrap().len(), 1);
        assert!(db.query_by_origin("https://nowhere", BranchFilter::All).unwrap().is_empty());
    }

    #[test]
    fn reload_skips_everything() {
        let mut db = Database::open_in_memory().unwrap();
        let first = db.load_records(&two_records()[..], 1).unwrap();
        let state = db.dump_state().unwrap();
        let second = db.load_records(&two_records()[..], 1).unwrap();
        assert_eq!((second.inserted, second.skipped_duplicates), (0, 2));
        assert_eq!(db.dump_state().unwrap(), state);
        assert!(second.dataset_version > first.dataset_version);
    }

    #[test]
    fn bad_line_is_reported_and_others_kept() {
        let mut data = two_records();
        let mut bad = record(URL, "refs/heads/x", 'b', "Dir", "FileModified");
        bad.category = "Weird".into();
        data.extend(serde_json::to_vec(&bad).unwrap());
        data.push(b'\n');
        let mut db = Database::open_in_memory().unwrap();
        let summary = db.load_records(&data[..], 3).unwrap();
        assert_eq!(summary.inserted, 2);
        assert_eq!(summary.errors.len(), 1);
        assert_eq!(summary.errors[0].0, 3);
    }

    #[test]
    fn versions_increase() {
        let mut db = Database::open_in_memory().unwrap();
        assert_eq!(db.dataset_version().unwrap(), None);
        let mut last = String::new();
        for _ in 0..5 {
            let v = db.load_records(&b""[..], 1).unwrap().dataset_version;
            assert!(v > last);
            last = v;
        }
        assert_eq!(db.dataset_version().unwrap(), Some(last));
    }

    #[test]
    fn no_orphans() {
        let mut db = Database::open_in_memory().unwrap();
        db.load_records(&two_records()[..], 1).unwrap();
        assert_eq!(db.orphaned_file_rows().unwrap(), 0);
    }
}
