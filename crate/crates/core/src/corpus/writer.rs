use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Snapshot;
use crate::odb::loose::encode_loose_object;
use crate::odb::MemoryRepository;
use crate::origin::sanitize_origin;
use crate::snapshot::{OriginArchive, SnapshotManifest};

use super::GroundTruth;

const CONFIG: &str = "[core]\n\trepositoryformatversion = 0\n\tfilemode = true\n\tbare = true\n";

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Materializes an archive directory exactly as capture would leave it:
/// a bare repository holding every object as a loose file, the snapshot
/// refs under their capture namespace, one manifest per snapshot, and
/// `truth.json` alongside. Any previous directory for the origin is
/// replaced.
pub fn write_archive(
    out: &Path,
    origin: &str,
    repo: &MemoryRepository,
    snapshots: &[Snapshot],
    truth: &GroundTruth,
) -> Result<OriginArchive> {
    let storage = out.join(sanitize_origin(origin));
    if storage.exists() {
        fs::remove_dir_all(&storage).map_err(|e| Error::io(&storage, e))?;
    }
    let git = storage.join("objects");
    write(&git.join("HEAD"), b"ref: refs/heads/main\n")?;
    write(&git.join("config"), CONFIG.as_bytes())?;
    fs::create_dir_all(git.join("refs/heads")).map_err(|e| Error::io(&git, e))?;

    let mut objects: Vec<_> = repo.objects().collect();
    objects.sort_by_key(|(id, _)| **id);
    for (id, raw) in objects {
        let hex = id.to_hex();
        let path = git.join("objects").join(&hex[..2]).join(&hex[2..]);
        write(&path, &encode_loose_object(raw.kind, &raw.data))?;
    }

    for snapshot in snapshots {
        for (name, target) in &snapshot.refs {
            let rest = name.strip_prefix("refs/").unwrap_or(name);
            let path = git
                .join("refs/historian")
                .join(snapshot.captured_at.to_string())
                .join(rest);
            write(&path, format!("{}\n", target.to_hex()).as_bytes())?;
        }
        let manifest = SnapshotManifest::from(snapshot);
        let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        write(
            &storage
                .join("snapshots")
                .join(format!("{}.json", snapshot.snapshot_id)),
            &json,
        )?;
    }
    write(&storage.join("origin"), origin.as_bytes())?;
    let truth_json = serde_json::to_vec_pretty(truth).expect("truth serializes");
    write(&storage.join("truth.json"), &truth_json)?;
    OriginArchive::load(&storage)
}
