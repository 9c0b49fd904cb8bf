use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::pipeline::PipelineResult;
use super::proteome::ProteomeRun;
use super::{CurationRequest, ServiceError};

/// One JSON record per request, bundle and proteome run, plus an artifact
/// directory per request. Records are replaced atomically.
pub struct Store {
    root: PathBuf,
    alloc: Mutex<()>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ServiceError> {
    let dir = path.parent().expect("record paths have a parent");
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    serde_json::to_writer_pretty(&mut tmp, value).map_err(|e| ServiceError::Io(e.to_string()))?;
    tmp.write_all(b"\n")?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| ServiceError::Io(e.to_string()))?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<Option<T>, ServiceError> {
    match fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| ServiceError::Io(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn list_ids(dir: &Path) -> Result<Vec<String>, ServiceError> {
    let mut ids = Vec::new();
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(ids),
        Err(e) => return Err(e.into()),
    };
    for entry in entries {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if let Some(id) = name.strip_suffix(".json") {
            ids.push(id.to_string());
        }
    }
    ids.sort();
    Ok(ids)
}

impl Store {
    pub fn open(root: &Path) -> Result<Self, ServiceError> {
        for sub in ["requests", "bundles", "runs", "artifacts"] {
            fs::create_dir_all(root.join(sub))?;
        }
        Ok(Store {
            root: root.to_path_buf(),
            alloc: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn request_path(&self, id: &str) -> PathBuf {
        self.root.join("requests").join(format!("{id}.json"))
    }

    fn run_path(&self, id: &str) -> PathBuf {
        self.root.join("runs").join(format!("{id}.json"))
    }

    pub fn artifact_dir(&self, id: &str) -> PathBuf {
        self.root.join("artifacts").join(id)
    }

    fn taken(&self, id: &str) -> bool {
        self.request_path(id).exists() || self.run_path(id).exists()
    }

    /// Draw ids from `generate` until one is unused, then persist the record
    /// built from it while still holding the allocation lock.
    pub fn allocate<T, G, B>(&self, mut generate: G, build: B) -> Result<T, ServiceError>
    where
        G: FnMut() -> String,
        B: FnOnce(String) -> Result<T, ServiceError>,
    {
        let _guard = self.alloc.lock().expect("allocation lock");
        let mut id = generate();
        while self.taken(&id) {
            id = generate();
        }
        build(id)
    }

    pub fn save_request(&self, r: &CurationRequest) -> Result<(), ServiceError> {
        write_json(&self.request_path(&r.id), r)
    }

    pub fn load_request(&self, id: &str) -> Result<Option<CurationRequest>, ServiceError> {
        if !valid_id(id) {
            return Ok(None);
        }
        read_json(&self.request_path(id))
    }

    pub fn request_ids(&self) -> Result<Vec<String>, ServiceError> {
        list_ids(&self.root.join("requests"))
    }

    pub fn save_result(&self, id: &str, r: &PipelineResult) -> Result<(), ServiceError> {
        write_json(&self.root.join("bundles").join(format!("{id}.json")), r)
    }

    pub fn load_result(&self, id: &str) -> Result<Option<PipelineResult>, ServiceError> {
        if !valid_id(id) {
            return Ok(None);
        }
        read_json(&self.root.join("bundles").join(format!("{id}.json")))
    }

    pub fn save_run(&self, run: &ProteomeRun) -> Result<(), ServiceError> {
        write_json(&self.run_path(&run.run_id), run)
    }

    pub fn load_run(&self, id: &str) -> Result<Option<ProteomeRun>, ServiceError> {
        if !valid_id(id) {
            return Ok(None);
        }
        read_json(&self.run_path(id))
    }

    pub fn run_ids(&self) -> Result<Vec<String>, ServiceError> {
        list_ids(&self.root.join("runs"))
    }
}

/// Ids are URL-safe tokens; anything else never names a record.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}
