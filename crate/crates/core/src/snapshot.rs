//! Local archive of repository snapshots.
//!
//! Each origin gets a directory under the archive root:
//!
//! ```text
//! <root>/<sanitized-origin>/origin             origin URL
//! <root>/<sanitized-origin>/objects/           bare repository, append-only
//! <root>/<sanitized-origin>/snapshots/<id>.json
//! ```
//!
//! Every capture fetches into its own ref namespace
//! (`refs/historian/<captured_at>/...`) and those refs are never deleted, so
//! commits dropped by a later rewrite stay reachable from the store.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha1::{Digest, Sha1};

use crate::error::{Error, Result};
use crate::gitcli;
use crate::model::{parse_object_id, ObjectId, Snapshot};
use crate::odb::{DiskRepository, RepositoryReader};
use crate::origin::sanitize_origin;

const NAMESPACE: &str = "refs/historian";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefRecord {
    pub name: String,
    pub target: ObjectId,
}

/// Serialized form of a [`Snapshot`]; refs sorted by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotManifest {
    pub origin: String,
    pub captured_at: i64,
    pub snapshot_id: String,
    pub refs: Vec<RefRecord>,
}

impl From<&Snapshot> for SnapshotManifest {
    fn from(snapshot: &Snapshot) -> Self {
        SnapshotManifest {
            origin: snapshot.origin.clone(),
            captured_at: snapshot.captured_at,
            snapshot_id: snapshot.snapshot_id.clone(),
            refs: snapshot
                .refs
                .iter()
                .map(|(name, target)| RefRecord {
                    name: name.clone(),
                    target: *target,
                })
                .collect(),
        }
    }
}

impl SnapshotManifest {
    /// Parses one manifest and checks its structural invariants.
    pub fn parse(text: &str) -> std::result::Result<SnapshotManifest, String> {
        let manifest: SnapshotManifest = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if manifest.snapshot_id.is_empty() {
            return Err("empty snapshot_id".into());
        }
        if manifest.refs.windows(2).any(|w| w[0].name >= w[1].name) {
            return Err("refs not sorted by name or not unique".into());
        }
        Ok(manifest)
    }

    pub fn into_snapshot(self) -> Snapshot {
        Snapshot {
            origin: self.origin,
            captured_at: self.captured_at,
            snapshot_id: self.snapshot_id,
            refs: self.refs.into_iter().map(|r| (r.name, r.target)).collect(),
        }
    }
}

/// Content-derived snapshot identifier, unique per (origin, time, refs).
pub fn snapshot_id(origin: &str, captured_at: i64, refs: &BTreeMap<String, ObjectId>) -> String {
    let mut hasher = Sha1::new();
    hasher.update(origin.as_bytes());
    hasher.update([0]);
    hasher.update(captured_at.to_string().as_bytes());
    for (name, target) in refs {
        hasher.update([0]);
        hasher.update(name.as_bytes());
        hasher.update(b" ");
        hasher.update(target.to_hex().as_bytes());
    }
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone)]
pub struct OriginArchive {
    pub origin: String,
    pub storage_path: PathBuf,
    /// Ascending by `captured_at`, no ties.
    pub snapshots: Vec<Snapshot>,
}

impl OriginArchive {
    /// Opens the archive for `origin` under `root`, creating it if needed.
    pub fn open_or_init(root: &Path, origin: &str) -> Result<OriginArchive> {
        let storage_path = root.join(sanitize_origin(origin));
        if storage_path.join("origin").is_file() {
            let archive = OriginArchive::load(&storage_path)?;
            if archive.origin != origin {
                return Err(Error::Archive(format!(
                    "{} already holds origin {}",
                    storage_path.display(),
                    archive.origin
                )));
            }
            return Ok(archive);
        }
        fs::create_dir_all(storage_path.join("snapshots"))
            .map_err(|e| Error::io(&storage_path, e))?;
        gitcli::init_bare(&storage_path.join("objects"))?;
        write_atomic(&storage_path.join("origin"), origin.as_bytes())?;
        Ok(OriginArchive {
            origin: origin.to_string(),
            storage_path,
            snapshots: Vec::new(),
        })
    }

    /// Loads an existing archive directory.
    pub fn load(storage_path: &Path) -> Result<OriginArchive> {
        let origin_file = storage_path.join("origin");
        let origin = fs::read_to_string(&origin_file).map_err(|e| Error::io(&origin_file, e))?;
        let origin = origin.trim_end_matches('\n').to_string();

        let snap_dir = storage_path.join("snapshots");
        let mut snapshots = Vec::new();
        if snap_dir.is_dir() {
            let listing = fs::read_dir(&snap_dir).map_err(|e| Error::io(&snap_dir, e))?;
            for entry in listing {
                let path = entry.map_err(|e| Error::io(&snap_dir, e))?.path();
                if path.extension().is_none_or(|ext| ext != "json") {
                    continue;
                }
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                let manifest = SnapshotManifest::parse(&text)
                    .map_err(|reason| Error::Archive(format!("{}: {reason}", path.display())))?;
                snapshots.push(manifest.into_snapshot());
            }
        }
        snapshots.sort_by_key(|s| s.captured_at);
        if snapshots.windows(2).any(|w| w[0].captured_at == w[1].captured_at) {
            return Err(Error::Archive(format!(
                "{}: two snapshots share a capture time",
                storage_path.display()
            )));
        }
        Ok(OriginArchive {
            origin,
            storage_path: storage_path.to_path_buf(),
            snapshots,
        })
    }

    pub fn objects_path(&self) -> PathBuf {
        self.storage_path.join("objects")
    }

    pub fn reader(&self) -> Result<DiskRepository> {
        DiskRepository::open(self.objects_path())
    }

    /// Captures the current state of the origin using the wall clock.
    pub fn capture(&mut self) -> Result<Snapshot> {
        let _lock = self.lock()?;
        let last = self.snapshots.last().map(|s| s.captured_at);
        let captured_at = loop {
            let now = unix_now();
            match last {
                Some(last) if now <= last => std::thread::sleep(Duration::from_secs(1)),
                _ => break now,
            }
        };
        self.capture_locked(captured_at)
    }

    /// Captures with an explicit timestamp, which must be later than every
    /// existing snapshot.
    pub fn capture_at(&mut self, captured_at: i64) -> Result<Snapshot> {
        let _lock = self.lock()?;
        self.capture_locked(captured_at)
    }

    fn lock(&self) -> Result<File> {
        let path = self.storage_path.join("capture.lock");
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        file.lock().map_err(|e| Error::io(&path, e))?;
        Ok(file)
    }

    fn capture_locked(&mut self, captured_at: i64) -> Result<Snapshot> {
        if let Some(last) = self.snapshots.last() {
            if captured_at <= last.captured_at {
                return Err(Error::Archive(format!(
                    "capture time {captured_at} not after last snapshot ({})",
                    last.captured_at
                )));
            }
        }
        let objects = self.objects_path();
        let namespace = format!("{NAMESPACE}/{captured_at}");
        let refspecs = [
            format!("+refs/heads/*:{namespace}/heads/*"),
            format!("+refs/tags/*:{namespace}/tags/*"),
            format!("+refs/pull/*/head:{namespace}/pull/*/head"),
        ];
        let output = gitcli::output(
            Some(&objects),
            ["fetch", "--quiet", "--no-tags", "--no-write-fetch-head", &self.origin]
                .into_iter()
                .map(String::from)
                .chain(refspecs),
        )?;
        if !output.status.success() {
            return Err(Error::NetworkFailure {
                origin: self.origin.clone(),
                message: String::from_utf8_lossy(&output.stderr).trim().to_string(),
            });
        }

        let refs = read_namespace(&objects, &namespace)?;
        let reader = DiskRepository::open(&objects)?;
        for (name, target) in &refs {
            if reader.commit(target).is_err() {
                return Err(Error::CorruptRemote {
                    origin: self.origin.clone(),
                    reference: name.clone(),
                    target: *target,
                });
            }
        }

        let snapshot = Snapshot {
            origin: self.origin.clone(),
            captured_at,
            snapshot_id: snapshot_id(&self.origin, captured_at, &refs),
            refs,
        };
        let manifest = SnapshotManifest::from(&snapshot);
        let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        write_atomic(
            &self
                .storage_path
                .join("snapshots")
                .join(format!("{}.json", snapshot.snapshot_id)),
            &json,
        )?;
        self.snapshots.push(snapshot.clone());
        Ok(snapshot)
    }
}

/// Refs fetched into `namespace`, mapped back to their remote names and
/// peeled to commits. Refs that do not resolve to a commit are dropped.
fn read_namespace(objects: &Path, namespace: &str) -> Result<BTreeMap<String, ObjectId>> {
    let format = "%(refname)%00%(objectname)%00%(objecttype)%00%(*objectname)%00%(*objecttype)";
    let out = gitcli::run(
        Some(objects),
        [
            "for-each-ref".to_string(),
            format!("--format={format}"),
            format!("{namespace}/"),
        ],
    )?;
    let mut refs = BTreeMap::new();
    for line in String::from_utf8_lossy(&out).lines() {
        let fields: Vec<&str> = line.split('\0').collect();
        let [refname, object, kind, peeled, peeled_kind] = fields[..] else {
            continue;
        };
        let target = match (kind, peeled_kind) {
            ("commit", _) => object,
            ("tag", "commit") => peeled,
            _ => continue,
        };
        let Some(rest) = refname.strip_prefix(namespace).and_then(|r| r.strip_prefix('/')) else {
            continue;
        };
        refs.insert(format!("refs/{rest}"), parse_object_id(target)?);
    }
    Ok(refs)
}

/// Consecutive snapshot pairs in capture order.
pub fn list_snapshot_pairs(archive: &OriginArchive) -> Result<Vec<(&Snapshot, &Snapshot)>> {
    if archive.snapshots.len() < 2 {
        return Err(Error::InsufficientSnapshots(archive.origin.clone()));
    }
    Ok(archive
        .snapshots
        .windows(2)
        .map(|w| (&w[0], &w[1]))
        .collect())
}

/// Every origin archive found directly under `root`, sorted by origin.
pub fn list_archives(root: &Path) -> Result<Vec<OriginArchive>> {
    let listing = match fs::read_dir(root) {
        Ok(listing) => listing,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(root, e)),
    };
    let mut archives = Vec::new();
    for entry in listing {
        let path = entry.map_err(|e| Error::io(root, e))?.path();
        if path.join("origin").is_file() {
            archives.push(OriginArchive::load(&path)?);
        }
    }
    archives.sort_by(|a, b| a.origin.cmp(&b.origin));
    Ok(archives)
}

/// Writes every snapshot manifest as one JSON line.
pub fn export_dataset(archives: &[OriginArchive], out: &Path) -> Result<()> {
    let file = File::create(out).map_err(|e| Error::io(out, e))?;
    let mut writer = BufWriter::new(file);
    for archive in archives {
        for snapshot in &archive.snapshots {
            let line = serde_json::to_string(&SnapshotManifest::from(snapshot))
                .expect("manifest serializes");
            writeln!(writer, "{line}").map_err(|e| Error::io(out, e))?;
        }
    }
    writer.flush().map_err(|e| Error::io(out, e))
}

/// Reads a snapshot dataset back. Object payloads are not embedded: each
/// returned archive points at `archive_root/<sanitized-origin>`.
pub fn import_dataset(input: &Path, archive_root: &Path) -> Result<Vec<OriginArchive>> {
    let file = File::open(input).map_err(|e| Error::io(input, e))?;
    parse_dataset(BufReader::new(file), archive_root)
}

pub fn parse_dataset<R: BufRead>(input: R, archive_root: &Path) -> Result<Vec<OriginArchive>> {
    let mut archives: Vec<OriginArchive> = Vec::new();
    for (index, line) in input.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|e| Error::MalformedRecord {
            line: line_no,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let manifest = SnapshotManifest::parse(&line).map_err(|reason| Error::MalformedRecord {
            line: line_no,
            reason,
        })?;
        let snapshot = manifest.into_snapshot();
        let archive = match archives.iter_mut().find(|a| a.origin == snapshot.origin) {
            Some(archive) => archive,
            None => {
                archives.push(OriginArchive {
                    origin: snapshot.origin.clone(),
                    storage_path: archive_root.join(sanitize_origin(&snapshot.origin)),
                    snapshots: Vec::new(),
                });
                archives.last_mut().expect("just pushed")
            }
        };
        let clash = archive.snapshots.iter().any(|s| {
            s.captured_at == snapshot.captured_at || s.snapshot_id == snapshot.snapshot_id
        });
        if clash {
            return Err(Error::MalformedRecord {
                line: line_no,
                reason: "duplicate snapshot id or capture time for origin".into(),
            });
        }
        archive.snapshots.push(snapshot);
    }
    for archive in &mut archives {
        archive.snapshots.sort_by_key(|s| s.captured_at);
    }
    Ok(archives)
}

fn unix_now() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
