//! Accession resolution and remote retrieval of structures and proteome
//! listings, with an on-disk cache and an offline fixture mode.

mod accession;
mod catalog;
mod transport;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use accession::{resolve_accession, AccessionKind, AccessionRef};
pub use catalog::{fixture_accessions, fixture_proteome, fixture_structure, FIXTURE_PROTEOME};
pub use transport::{HttpTransport, NoNetwork, RecordingTransport, Transport, TransportError};

use crate::structmodel::{parse_pdb, ProteinStructure, StructError, StructureSource};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClientError {
    #[error("unrecognized accession '{0}'")]
    Unrecognized(String),
    #[error("{0} is not a structure accession")]
    NotAStructure(String),
    #[error("not found upstream: {0}")]
    NotFoundUpstream(String),
    #[error("network failure: {0}")]
    NetworkFailure(String),
    #[error("offline and not cached: {0}")]
    OfflineMiss(String),
    #[error("cache i/o: {0}")]
    Io(String),
    #[error("unparseable structure {0}: {1}")]
    Parse(String, StructError),
    #[error("malformed proteome listing: {0}")]
    BadListing(String),
}

impl From<std::io::Error> for ClientError {
    fn from(e: std::io::Error) -> Self {
        ClientError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchRecord {
    pub reference: AccessionRef,
    pub source: StructureSource,
    pub path: PathBuf,
    pub fetched_at: DateTime<Utc>,
    pub from_cache: bool,
    /// Time spent downloading on a cache miss; zero for cache hits.
    pub download_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProteomeComponent {
    pub name: String,
    pub accession: String,
    pub pdb_ids: Vec<String>,
    pub alphafold_available: bool,
}

impl ProteomeComponent {
    /// PDB cross-reference first, AlphaFold model otherwise.
    pub fn preferred_structure(&self) -> Option<AccessionRef> {
        self.pdb_ids
            .first()
            .map(|p| AccessionRef::pdb(p))
            .or_else(|| self.alphafold_available.then(|| AccessionRef::uniprot(&self.accession)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProteomeManifest {
    pub proteome_id: String,
    pub components: Vec<ProteomeComponent>,
}

/// One component's assignment in a proteome run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedStructure {
    pub component: String,
    pub structure: Option<AccessionRef>,
    pub skip_reason: Option<String>,
}

impl ProteomeManifest {
    /// Preferred structure per component. A PDB id already claimed by an
    /// earlier component is skipped so every structure is processed once.
    pub fn structure_plan(&self) -> Vec<PlannedStructure> {
        let mut claimed: HashMap<AccessionRef, String> = HashMap::new();
        self.components
            .iter()
            .map(|c| {
                let (structure, skip_reason) = match c.preferred_structure() {
                    None => (None, Some("no PDB cross-reference or AlphaFold model".to_string())),
                    Some(r) => match claimed.get(&r) {
                        Some(owner) => (None, Some(format!("{} already processed for {}", r.value, owner))),
                        None => {
                            claimed.insert(r.clone(), c.name.clone());
                            (Some(r), None)
                        }
                    },
                };
                PlannedStructure {
                    component: c.name.clone(),
                    structure,
                    skip_reason,
                }
            })
            .collect()
    }
}

/// Parse a UniProt TSV listing with Entry, Protein names, PDB and AlphaFoldDB columns.
pub fn parse_proteome_listing(proteome_id: &str, tsv: &str) -> Result<ProteomeManifest, ClientError> {
    let mut lines = tsv.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| ClientError::BadListing("empty listing".into()))?
        .split('\t')
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| ClientError::BadListing(format!("missing column {name}")))
    };
    let (entry, names, pdb, af) = (col("Entry")?, col("Protein names")?, col("PDB")?, col("AlphaFoldDB")?);
    let split = |s: &str| -> Vec<String> {
        s.split(';')
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(str::to_ascii_uppercase)
            .collect()
    };
    let mut components = Vec::new();
    for line in lines {
        let cols: Vec<&str> = line.split('\t').collect();
        let get = |i: usize| cols.get(i).copied().unwrap_or("").trim();
        let accession = get(entry).to_string();
        if accession.is_empty() {
            return Err(ClientError::BadListing(line.to_string()));
        }
        let name = match get(names) {
            "" => accession.clone(),
            n => n.to_string(),
        };
        components.push(ProteomeComponent {
            name,
            pdb_ids: split(get(pdb)),
            alphafold_available: !split(get(af)).is_empty(),
            accession,
        });
    }
    Ok(ProteomeManifest {
        proteome_id: proteome_id.to_string(),
        components,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientConfig {
    pub cache_dir: PathBuf,
    pub offline: bool,
    pub alphafold_version: u32,
    /// `{ID}` is replaced by the upper-case PDB id.
    pub pdb_url: String,
    /// `{ACC}` and `{V}` are replaced by accession and model version.
    pub alphafold_url: String,
    /// `{ID}` is replaced by the proteome id.
    pub proteome_url: String,
    pub retry_attempts: u32,
    pub retry_base_delay: Duration,
}

impl ClientConfig {
    pub fn new(cache_dir: impl Into<PathBuf>) -> Self {
        ClientConfig {
            cache_dir: cache_dir.into(),
            offline: false,
            alphafold_version: 4,
            pdb_url: "https://files.rcsb.org/download/{ID}.pdb".into(),
            alphafold_url: "https://alphafold.ebi.ac.uk/files/AF-{ACC}-F1-model_v{V}.pdb".into(),
            proteome_url: "https://rest.uniprot.org/uniprotkb/stream?query=proteome:{ID}&format=tsv&fields=accession,protein_name,xref_pdb,xref_alphafolddb".into(),
            retry_attempts: 3,
            retry_base_delay: Duration::from_millis(500),
        }
    }

    /// Defaults overridden by DAISY_CACHE_DIR, DAISY_OFFLINE and DAISY_AF_VERSION.
    pub fn from_env() -> Self {
        let cache = std::env::var_os("DAISY_CACHE_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| std::env::temp_dir().join("daisy-cache"));
        let mut c = ClientConfig::new(cache);
        c.offline = std::env::var("DAISY_OFFLINE").is_ok_and(|v| v == "1" || v.eq_ignore_ascii_case("true"));
        if let Some(v) = std::env::var("DAISY_AF_VERSION").ok().and_then(|v| v.parse().ok()) {
            c.alphafold_version = v;
        }
        c
    }

    fn structure_url(&self, r: &AccessionRef) -> String {
        match r.kind {
            AccessionKind::UniprotAcc => self
                .alphafold_url
                .replace("{ACC}", &r.value)
                .replace("{V}", &self.alphafold_version.to_string()),
            _ => self.pdb_url.replace("{ID}", &r.value),
        }
    }

    fn structure_path(&self, r: &AccessionRef) -> PathBuf {
        match r.kind {
            AccessionKind::UniprotAcc => self
                .cache_dir
                .join("alphafold")
                .join(format!("AF-{}-F1-model_v{}.pdb", r.value, self.alphafold_version)),
            AccessionKind::Synthetic => self.cache_dir.join("synthetic").join(format!("{}.pdb", r.value)),
            _ => self.cache_dir.join("pdb").join(format!("{}.pdb", r.value)),
        }
    }
}

/// Fetcher shared by the pipeline; safe to use from many threads.
pub struct Clients {
    pub config: ClientConfig,
    transport: Arc<dyn Transport>,
    flights: Mutex<HashMap<PathBuf, Arc<Mutex<()>>>>,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ClientError> {
    let dir = path
        .parent()
        .ok_or_else(|| ClientError::Io("cache path has no parent".into()))?;
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| ClientError::Io(e.to_string()))?;
    Ok(())
}

fn modified_at(path: &Path) -> DateTime<Utc> {
    fs::metadata(path)
        .and_then(|m| m.modified())
        .map(DateTime::<Utc>::from)
        .unwrap_or_else(|_| Utc::now())
}

impl Clients {
    pub fn new(config: ClientConfig, transport: Arc<dyn Transport>) -> Self {
        Clients {
            config,
            transport,
            flights: Mutex::new(HashMap::new()),
        }
    }

    /// HTTP transport when online, a refusing transport when offline.
    pub fn from_config(config: ClientConfig) -> Self {
        let transport: Arc<dyn Transport> = if config.offline {
            Arc::new(NoNetwork)
        } else {
            Arc::new(HttpTransport::default())
        };
        Self::new(config, transport)
    }

    fn flight(&self, path: &Path) -> Arc<Mutex<()>> {
        self.flights
            .lock()
            .expect("flight table lock")
            .entry(path.to_path_buf())
            .or_default()
            .clone()
    }

    fn download(&self, url: &str) -> Result<Vec<u8>, ClientError> {
        let mut delay = self.config.retry_base_delay;
        let attempts = self.config.retry_attempts.max(1);
        for attempt in 1..=attempts {
            match self.transport.get(url) {
                Ok(body) => return Ok(body),
                Err(TransportError::NotFound(_)) => return Err(ClientError::NotFoundUpstream(url.to_string())),
                Err(TransportError::Fatal(m)) => return Err(ClientError::NetworkFailure(m)),
                Err(TransportError::Retryable(m)) if attempt == attempts => {
                    return Err(ClientError::NetworkFailure(format!("{m} (after {attempts} attempts)")))
                }
                Err(TransportError::Retryable(m)) => {
                    log::warn!("attempt {attempt}/{attempts} for {url} failed: {m}");
                    std::thread::sleep(delay);
                    delay *= 2;
                }
            }
        }
        unreachable!("loop returns on the last attempt")
    }

    /// Cached file at `path`, produced by `fixture` or `url` on a miss.
    fn cached(
        &self,
        path: &Path,
        key: &str,
        fixture: Option<String>,
        url: Option<String>,
    ) -> Result<(bool, f64), ClientError> {
        let flight = self.flight(path);
        let _guard = flight.lock().expect("single-flight lock");
        if path.is_file() {
            return Ok((true, 0.0));
        }
        if let Some(text) = fixture {
            write_atomic(path, text.as_bytes())?;
            return Ok((false, 0.0));
        }
        let url = match url {
            Some(u) if !self.config.offline => u,
            _ => return Err(ClientError::OfflineMiss(key.to_string())),
        };
        let started = Instant::now();
        let body = self.download(&url)?;
        write_atomic(path, &body)?;
        Ok((false, started.elapsed().as_secs_f64()))
    }

    pub fn fetch_structure(&self, r: &AccessionRef) -> Result<FetchRecord, ClientError> {
        let path = self.config.structure_path(r);
        let (fixture, url) = match r.kind {
            AccessionKind::ProteomeId => return Err(ClientError::NotAStructure(r.value.clone())),
            AccessionKind::Synthetic => (fixture_structure(r), None),
            _ if self.config.offline => (fixture_structure(r), None),
            _ => (None, Some(self.config.structure_url(r))),
        };
        if r.kind == AccessionKind::Synthetic && fixture.is_none() && !path.is_file() {
            return Err(ClientError::NotFoundUpstream(r.value.clone()));
        }
        let (from_cache, download_seconds) = self.cached(&path, &r.value, fixture, url)?;
        Ok(FetchRecord {
            reference: r.clone(),
            source: match r.kind {
                AccessionKind::UniprotAcc => StructureSource::Alphafold,
                _ => StructureSource::Pdb,
            },
            fetched_at: modified_at(&path),
            path,
            from_cache,
            download_seconds,
        })
    }

    /// Fetch and parse; the structure keeps the requested accession.
    pub fn load_structure(&self, r: &AccessionRef) -> Result<(ProteinStructure, FetchRecord), ClientError> {
        let record = self.fetch_structure(r)?;
        let text = fs::read_to_string(&record.path)?;
        let mut structure = parse_pdb(&text).map_err(|e| ClientError::Parse(r.value.clone(), e))?;
        structure.accession = r.value.clone();
        structure.source = record.source;
        structure.fetched_at = Some(record.fetched_at);
        Ok((structure, record))
    }

    pub fn fetch_proteome_manifest(&self, proteome_id: &str) -> Result<ProteomeManifest, ClientError> {
        let r = resolve_accession(proteome_id)?;
        if r.kind != AccessionKind::ProteomeId {
            return Err(ClientError::Unrecognized(proteome_id.to_string()));
        }
        let path = self.config.cache_dir.join("proteomes").join(format!("{}.tsv", r.value));
        let fixture = if self.config.offline {
            fixture_proteome(&r.value)
        } else {
            None
        };
        let url = Some(self.config.proteome_url.replace("{ID}", &r.value));
        self.cached(&path, &r.value, fixture, url)?;
        let manifest = parse_proteome_listing(&r.value, &fs::read_to_string(&path)?)?;
        let mut seen = HashSet::new();
        if manifest.components.iter().any(|c| !seen.insert(c.accession.clone())) {
            log::warn!("proteome {} lists duplicate components", r.value);
        }
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clients(dir: &Path, offline: bool, transport: Arc<RecordingTransport>) -> Clients {
        let mut config = ClientConfig::new(dir);
        config.offline = offline;
        config.retry_base_delay = Duration::ZERO;
        Clients::new(config, transport)
    }

    #[test]
    fn alphafold_template() {
        let c = ClientConfig::new("/tmp");
        let url = c.structure_url(&AccessionRef::uniprot("P12345"));
        assert!(url.ends_with("/AF-P12345-F1-model_v4.pdb"), "{url}");
        let mut c = c;
        c.alphafold_version = 6;
        assert!(c
            .structure_url(&AccessionRef::uniprot("P12345"))
            .ends_with("model_v6.pdb"));
        assert_eq!(
            c.structure_url(&AccessionRef::pdb("4f47")),
            "https://files.rcsb.org/download/4F47.pdb"
        );
    }

    #[test]
    fn retries_then_fails() {
        let dir = tempfile::tempdir().unwrap();
        let t = Arc::new(RecordingTransport::new().fallback(TransportError::Retryable("reset".into())));
        let c = clients(dir.path(), false, t.clone());
        let err = c.fetch_structure(&AccessionRef::pdb("1ABC")).unwrap_err();
        assert!(matches!(err, ClientError::NetworkFailure(_)));
        assert_eq!(t.requests().len(), 3);
        assert!(!c.config.structure_path(&AccessionRef::pdb("1ABC")).exists());
        let entries: Vec<_> = fs::read_dir(dir.path().join("pdb"))
            .map(|d| d.count())
            .into_iter()
            .collect();
        assert!(entries.iter().all(|&n| n == 0));
    }

    #[test]
    fn not_found_is_not_retried() {
        let dir = tempfile::tempdir().unwrap();
        let t = Arc::new(RecordingTransport::new());
        let c = clients(dir.path(), false, t.clone());
        assert!(matches!(
            c.fetch_structure(&AccessionRef::pdb("1ABC")),
            Err(ClientError::NotFoundUpstream(_))
        ));
        assert_eq!(t.requests().len(), 1);
    }

    #[test]
    fn listing_parse_and_plan() {
        let tsv = "Entry\tProtein names\tPDB\tAlphaFoldDB\n\
                   P1\tAlpha\t1ABC;2DEF;\tP1;\n\
                   P2\tBeta\t\tP2;\n\
                   P3\tGamma\t1abc;\t\n\
                   P4\tDelta\t\t\n";
        let m = parse_proteome_listing("UP000000001", tsv).unwrap();
        assert_eq!(m.components.len(), 4);
        let plan = m.structure_plan();
        assert_eq!(plan[0].structure, Some(AccessionRef::pdb("1ABC")));
        assert_eq!(plan[1].structure, Some(AccessionRef::uniprot("P2")));
        assert!(plan[2].structure.is_none());
        assert!(plan[2].skip_reason.as_ref().unwrap().contains("Alpha"));
        assert!(plan[3].structure.is_none() && plan[3].skip_reason.is_some());
    }

    #[test]
    fn fixture_proteome_offline() {
        let dir = tempfile::tempdir().unwrap();
        let t = Arc::new(RecordingTransport::new());
        let c = clients(dir.path(), true, t.clone());
        let m = c.fetch_proteome_manifest(FIXTURE_PROTEOME).unwrap();
        assert_eq!(m.components.len(), 5);
        let plan = m.structure_plan();
        let pdb = plan
            .iter()
            .filter(|p| p.structure.as_ref().is_some_and(|s| s.kind == AccessionKind::PdbId))
            .count();
        assert_eq!(pdb, 3);
        for p in &plan {
            let (s, _) = c.load_structure(p.structure.as_ref().unwrap()).unwrap();
            assert!(!s.chains.is_empty());
        }
        assert!(t.requests().is_empty());
    }
}
