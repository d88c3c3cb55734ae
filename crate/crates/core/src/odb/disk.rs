use std::collections::{HashMap, HashSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use super::loose::decode_loose_object;
use super::pack::PackFile;
use super::{RawObject, RepositoryReader};
use crate::error::{Error, Result};
use crate::model::{parse_commit, CommitRecord, ObjectId, ObjectKind};

/// Reader over the object database of a local (bare) repository.
///
/// Loose objects are read on demand. Packs are loaded when first needed; a
/// lookup miss rescans `objects/pack` so packs written after opening (by a
/// fetch into the same store) become visible without reopening.
pub struct DiskRepository {
    git_dir: PathBuf,
    objects_dir: PathBuf,
    packs: RwLock<Packs>,
    commits: RwLock<HashMap<ObjectId, Arc<CommitRecord>>>,
}

#[derive(Default)]
struct Packs {
    loaded: Vec<Arc<PackFile>>,
    seen: HashSet<PathBuf>,
}

impl DiskRepository {
    pub fn open(git_dir: impl AsRef<Path>) -> Result<DiskRepository> {
        let git_dir = git_dir.as_ref().to_path_buf();
        let objects_dir = git_dir.join("objects");
        if !objects_dir.is_dir() {
            return Err(Error::NotARepository(git_dir));
        }
        let repo = DiskRepository {
            git_dir,
            objects_dir,
            packs: RwLock::new(Packs::default()),
            commits: RwLock::new(HashMap::new()),
        };
        repo.rescan_packs()?;
        Ok(repo)
    }

    pub fn git_dir(&self) -> &Path {
        &self.git_dir
    }

    /// Loads packs that appeared since the last scan. Returns whether any did.
    fn rescan_packs(&self) -> Result<bool> {
        let pack_dir = self.objects_dir.join("pack");
        let listing = match fs::read_dir(&pack_dir) {
            Ok(listing) => listing,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(false),
            Err(e) => return Err(Error::io(&pack_dir, e)),
        };
        let mut idx_paths: Vec<PathBuf> = listing
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "idx"))
            .collect();
        idx_paths.sort();

        let mut packs = self.packs.write().expect("pack lock poisoned");
        let mut added = false;
        for idx_path in idx_paths {
            if packs.seen.contains(&idx_path) {
                continue;
            }
            let pack_path = idx_path.with_extension("pack");
            let index = fs::read(&idx_path).map_err(|e| Error::io(&idx_path, e))?;
            let data = match fs::read(&pack_path) {
                Ok(data) => data,
                // index written before the pack was renamed into place
                Err(e) if e.kind() == io::ErrorKind::NotFound => continue,
                Err(e) => return Err(Error::io(&pack_path, e)),
            };
            packs.loaded.push(Arc::new(PackFile::from_bytes(&index, data)?));
            packs.seen.insert(idx_path);
            added = true;
        }
        Ok(added)
    }

    fn read_loose(&self, id: &ObjectId) -> Result<Option<RawObject>> {
        let hex = id.to_hex();
        let path = self.objects_dir.join(&hex[..2]).join(&hex[2..]);
        match fs::read(&path) {
            Ok(bytes) => decode_loose_object(&bytes).map(Some),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    fn read_packed(&self, id: &ObjectId) -> Result<Option<RawObject>> {
        let packs: Vec<Arc<PackFile>> = self.packs.read().expect("pack lock poisoned").loaded.clone();
        let external = |base: &ObjectId| self.read_raw(base);
        for pack in &packs {
            if pack.contains(id) {
                return pack.read(id, &external);
            }
        }
        Ok(None)
    }
}

impl RepositoryReader for DiskRepository {
    fn read_raw(&self, id: &ObjectId) -> Result<Option<RawObject>> {
        if let Some(object) = self.read_packed(id)? {
            return Ok(Some(object));
        }
        if let Some(object) = self.read_loose(id)? {
            return Ok(Some(object));
        }
        if self.rescan_packs()? {
            return self.read_packed(id);
        }
        Ok(None)
    }

    fn commit(&self, id: &ObjectId) -> Result<Arc<CommitRecord>> {
        if let Some(commit) = self.commits.read().expect("commit cache poisoned").get(id) {
            return Ok(commit.clone());
        }
        let data = self.read_typed(id, ObjectKind::Commit)?;
        let commit = Arc::new(parse_commit(*id, &data)?);
        self.commits
            .write()
            .expect("commit cache poisoned")
            .insert(*id, commit.clone());
        Ok(commit)
    }
}
