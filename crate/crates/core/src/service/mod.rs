//! Request lifecycle, pipeline orchestration, proteome runs and statistics.
//!
//! Requests and runs are persisted as JSON records under a data directory
//! and executed by a pool of worker threads. Records left QUEUED or RUNNING
//! by a previous process are queued again on start.

pub mod http;
mod pipeline;
mod proteome;
mod store;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use chrono::{DateTime, Utc};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use pipeline::{
    ChainReport, Pipeline, PipelineResult, RegionSummary, ResultBundle, SEQUENCES_FILE, STRUCTURE_FILE, SUMMARY_FILE,
};
pub use proteome::{
    compute_proteome_stats, list_proteome_results, process_manifest, Direction, OrderBy, ProteomeEntry, ProteomeRun,
    ProteomeStats, ResultQuery,
};
pub use store::{valid_id, Store};

use crate::classify::SubclassId;
use crate::clients::{resolve_accession, AccessionKind, AccessionRef, ClientError};
use crate::reupred::ReupredError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ServiceError {
    #[error("invalid accession '{0}'")]
    InvalidAccession(String),
    #[error("invalid subclass '{0}'")]
    InvalidSubclass(String),
    #[error("an email address is required")]
    MissingEmail,
    #[error("advanced requests need at least one subclass")]
    EmptySelection,
    #[error("accession {0} does not fit mode {1:?}")]
    ModeMismatch(String, RequestMode),
    #[error("unknown request '{0}'")]
    UnknownToken(String),
    #[error("unknown proteome run '{0}'")]
    UnknownRun(String),
    #[error("run {0} has not finished")]
    RunIncomplete(String),
    #[error("no processed entries")]
    EmptyRun,
    #[error("service is shutting down")]
    ShuttingDown,
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Detector(#[from] ReupredError),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RequestMode {
    Basic,
    Advanced,
    Proteome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RequestStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl RequestStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, RequestStatus::Done | RequestStatus::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationRequest {
    pub id: String,
    /// Stored only; no mail is sent.
    pub email: String,
    pub accession: AccessionRef,
    pub mode: RequestMode,
    pub selected_subclasses: BTreeSet<SubclassId>,
    pub status: RequestStatus,
    pub submitted_at: DateTime<Utc>,
    pub started_at: Option<DateTime<Utc>>,
    pub finished_at: Option<DateTime<Utc>>,
    pub error: Option<String>,
}

const TOKEN_ALPHABET: &[u8; 64] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
const TOKEN_LEN: usize = 22;

/// 22 symbols of a 64-letter URL-safe alphabet (132 bits) from the thread CSPRNG.
pub fn generate_request_id() -> String {
    let mut rng = rand::thread_rng();
    (0..TOKEN_LEN)
        .map(|_| TOKEN_ALPHABET[rng.gen_range(0..TOKEN_ALPHABET.len())] as char)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Job {
    Request(String),
    Proteome(String),
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub workers: usize,
    /// Bounded fan-out inside one proteome run.
    pub proteome_parallelism: usize,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        ServiceConfig {
            data_dir: data_dir.into(),
            workers: cores,
            proteome_parallelism: cores,
        }
    }
}

struct Inner {
    store: Store,
    pipeline: Pipeline,
    proteome_parallelism: usize,
    stopping: AtomicBool,
}

pub struct Service {
    inner: Arc<Inner>,
    sender: Mutex<Option<Sender<Job>>>,
    workers: Mutex<Vec<JoinHandle<()>>>,
}

impl Service {
    /// Open the store, start the workers and requeue unfinished work.
    pub fn start(config: ServiceConfig, pipeline: Pipeline) -> Result<Arc<Service>, ServiceError> {
        let store = Store::open(&config.data_dir)?;
        let inner = Arc::new(Inner {
            store,
            pipeline,
            proteome_parallelism: config.proteome_parallelism.max(1),
            stopping: AtomicBool::new(false),
        });
        let (tx, rx) = mpsc::channel::<Job>();
        let rx = Arc::new(Mutex::new(rx));
        let workers = (0..config.workers.max(1))
            .map(|_| {
                let inner = inner.clone();
                let rx = rx.clone();
                std::thread::spawn(move || worker_loop(&inner, &rx))
            })
            .collect();
        let service = Arc::new(Service {
            inner,
            sender: Mutex::new(Some(tx)),
            workers: Mutex::new(workers),
        });
        service.recover()?;
        Ok(service)
    }

    fn recover(&self) -> Result<(), ServiceError> {
        let store = &self.inner.store;
        let mut proteome_ids = BTreeSet::new();
        for id in store.run_ids()? {
            let Some(mut run) = store.load_run(&id)? else { continue };
            if run.status.is_terminal() {
                continue;
            }
            if run.status == RequestStatus::Running {
                log::info!("run {id} was interrupted; queueing it again");
                run.status = RequestStatus::Queued;
                store.save_run(&run)?;
            }
            proteome_ids.insert(id.clone());
            self.enqueue(Job::Proteome(id))?;
        }
        for id in store.request_ids()? {
            let Some(mut req) = store.load_request(&id)? else {
                continue;
            };
            if req.status.is_terminal() {
                continue;
            }
            if req.status == RequestStatus::Running {
                log::info!("request {id} was interrupted; queueing it again");
                req.status = RequestStatus::Queued;
                req.started_at = None;
                store.save_request(&req)?;
            }
            if !proteome_ids.contains(&id) {
                self.enqueue(Job::Request(id))?;
            }
        }
        Ok(())
    }

    fn enqueue(&self, job: Job) -> Result<(), ServiceError> {
        self.sender
            .lock()
            .expect("sender lock")
            .as_ref()
            .ok_or(ServiceError::ShuttingDown)?
            .send(job)
            .map_err(|_| ServiceError::ShuttingDown)
    }

    pub fn store(&self) -> &Store {
        &self.inner.store
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.inner.pipeline
    }

    /// Validate, persist as QUEUED and hand to the worker pool.
    pub fn submit_request(
        &self,
        accession: &str,
        email: &str,
        mode: RequestMode,
        subclasses: &[String],
    ) -> Result<String, ServiceError> {
        let req = self.validate(accession, email, mode, subclasses)?;
        self.submit_validated(req, generate_request_id)
    }

    /// Like [`Service::submit_request`] with a caller-supplied id generator.
    pub fn submit_with_generator<G: FnMut() -> String>(
        &self,
        accession: &str,
        email: &str,
        mode: RequestMode,
        subclasses: &[String],
        generator: G,
    ) -> Result<String, ServiceError> {
        let req = self.validate(accession, email, mode, subclasses)?;
        self.submit_validated(req, generator)
    }

    fn validate(
        &self,
        accession: &str,
        email: &str,
        mode: RequestMode,
        subclasses: &[String],
    ) -> Result<CurationRequest, ServiceError> {
        if email.trim().is_empty() {
            return Err(ServiceError::MissingEmail);
        }
        let accession = resolve_accession(accession).map_err(|_| ServiceError::InvalidAccession(accession.into()))?;
        let is_proteome = accession.kind == AccessionKind::ProteomeId;
        if is_proteome != (mode == RequestMode::Proteome) {
            return Err(ServiceError::ModeMismatch(accession.value, mode));
        }
        let mut selected = BTreeSet::new();
        if mode == RequestMode::Advanced {
            for s in subclasses {
                let id: SubclassId = s.parse().map_err(|_| ServiceError::InvalidSubclass(s.clone()))?;
                if !self.inner.pipeline.taxonomy.contains(&id) {
                    return Err(ServiceError::InvalidSubclass(s.clone()));
                }
                selected.insert(id);
            }
            if selected.is_empty() {
                return Err(ServiceError::EmptySelection);
            }
        }
        Ok(CurationRequest {
            id: String::new(),
            email: email.trim().to_string(),
            accession,
            mode,
            selected_subclasses: selected,
            status: RequestStatus::Queued,
            submitted_at: Utc::now(),
            started_at: None,
            finished_at: None,
            error: None,
        })
    }

    fn submit_validated<G: FnMut() -> String>(
        &self,
        mut req: CurationRequest,
        generator: G,
    ) -> Result<String, ServiceError> {
        if self.inner.stopping.load(Ordering::SeqCst) {
            return Err(ServiceError::ShuttingDown);
        }
        let store = &self.inner.store;
        let id = store.allocate(generator, |id| {
            req.id = id.clone();
            if req.mode == RequestMode::Proteome {
                store.save_run(&new_run(&id, &req.accession.value, req.submitted_at))?;
            }
            store.save_request(&req)?;
            Ok(id)
        })?;
        self.enqueue(match req.mode {
            RequestMode::Proteome => Job::Proteome(id.clone()),
            _ => Job::Request(id.clone()),
        })?;
        Ok(id)
    }

    /// Queue a proteome run without an associated curation request.
    pub fn submit_proteome(&self, proteome_id: &str) -> Result<String, ServiceError> {
        let r = resolve_accession(proteome_id).map_err(|_| ServiceError::InvalidAccession(proteome_id.into()))?;
        if r.kind != AccessionKind::ProteomeId {
            return Err(ServiceError::InvalidAccession(proteome_id.into()));
        }
        if self.inner.stopping.load(Ordering::SeqCst) {
            return Err(ServiceError::ShuttingDown);
        }
        let store = &self.inner.store;
        let id = store.allocate(generate_request_id, |id| {
            store.save_run(&new_run(&id, &r.value, Utc::now()))?;
            Ok(id)
        })?;
        self.enqueue(Job::Proteome(id.clone()))?;
        Ok(id)
    }

    /// Request record, with its result once DONE.
    pub fn get_request(&self, id: &str) -> Result<(CurationRequest, Option<PipelineResult>), ServiceError> {
        let store = &self.inner.store;
        let req = store
            .load_request(id)?
            .ok_or_else(|| ServiceError::UnknownToken(id.into()))?;
        let result = match req.status {
            RequestStatus::Done => store.load_result(id)?,
            _ => None,
        };
        Ok((req, result))
    }

    pub fn get_run(&self, run_id: &str) -> Result<ProteomeRun, ServiceError> {
        self.inner
            .store
            .load_run(run_id)?
            .ok_or_else(|| ServiceError::UnknownRun(run_id.into()))
    }

    pub fn artifact_dir(&self, id: &str) -> PathBuf {
        self.inner.store.artifact_dir(id)
    }

    /// Stop taking jobs, let running ones finish and join the workers.
    /// Jobs still queued stay QUEUED on disk for the next start.
    pub fn shutdown(&self) {
        self.inner.stopping.store(true, Ordering::SeqCst);
        self.sender.lock().expect("sender lock").take();
        let workers = std::mem::take(&mut *self.workers.lock().expect("workers lock"));
        for w in workers {
            let _ = w.join();
        }
    }
}

impl Drop for Service {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn new_run(id: &str, proteome_id: &str, at: DateTime<Utc>) -> ProteomeRun {
    ProteomeRun {
        run_id: id.to_string(),
        proteome_id: proteome_id.to_string(),
        status: RequestStatus::Queued,
        submitted_at: at,
        finished_at: None,
        entries: Vec::new(),
        skipped: Vec::new(),
        stats: None,
        error: None,
    }
}

fn worker_loop(inner: &Inner, rx: &Mutex<Receiver<Job>>) {
    loop {
        if inner.stopping.load(Ordering::SeqCst) {
            return;
        }
        let job = match rx.lock().expect("queue lock").recv() {
            Ok(job) => job,
            Err(_) => return,
        };
        if inner.stopping.load(Ordering::SeqCst) {
            return;
        }
        let outcome = catch_unwind(AssertUnwindSafe(|| match &job {
            Job::Request(id) => execute_request(inner, id),
            Job::Proteome(id) => execute_run(inner, id),
        }));
        match outcome {
            Ok(Err(e)) => log::error!("{job:?}: {e}"),
            Err(_) => log::error!("{job:?}: worker job panicked"),
            Ok(Ok(())) => {}
        }
    }
}

fn execute_request(inner: &Inner, id: &str) -> Result<(), ServiceError> {
    let store = &inner.store;
    let Some(mut req) = store.load_request(id)? else {
        return Err(ServiceError::UnknownToken(id.into()));
    };
    if req.status != RequestStatus::Queued {
        return Ok(());
    }
    req.status = RequestStatus::Running;
    req.started_at = Some(Utc::now());
    store.save_request(&req)?;

    let selection = (req.mode == RequestMode::Advanced).then_some(&req.selected_subclasses);
    let out = store.artifact_dir(id);
    let result = catch_unwind(AssertUnwindSafe(|| inner.pipeline.run(&req.accession, selection, &out)));
    match result {
        Ok(Ok(res)) => {
            store.save_result(id, &res)?;
            req.status = RequestStatus::Done;
        }
        Ok(Err(e)) => {
            req.status = RequestStatus::Failed;
            req.error = Some(e.to_string());
        }
        Err(_) => {
            req.status = RequestStatus::Failed;
            req.error = Some("pipeline panicked".into());
        }
    }
    req.finished_at = Some(Utc::now());
    store.save_request(&req)
}

fn execute_run(inner: &Inner, id: &str) -> Result<(), ServiceError> {
    let store = &inner.store;
    let Some(mut run) = store.load_run(id)? else {
        return Err(ServiceError::UnknownRun(id.into()));
    };
    if run.status != RequestStatus::Queued {
        return Ok(());
    }
    let mut req = store.load_request(id)?;
    run.status = RequestStatus::Running;
    store.save_run(&run)?;
    if let Some(r) = req.as_mut() {
        r.status = RequestStatus::Running;
        r.started_at = Some(Utc::now());
        store.save_request(r)?;
    }

    match inner.pipeline.clients.fetch_proteome_manifest(&run.proteome_id) {
        Ok(manifest) => {
            let (entries, skipped) = process_manifest(
                &inner.pipeline,
                &manifest,
                inner.proteome_parallelism,
                &store.artifact_dir(id),
            );
            run.stats = compute_proteome_stats(&entries).ok();
            run.entries = entries;
            run.skipped = skipped;
            run.status = RequestStatus::Done;
        }
        Err(e) => {
            run.status = RequestStatus::Failed;
            run.error = Some(e.to_string());
        }
    }
    run.finished_at = Some(Utc::now());
    store.save_run(&run)?;
    if let Some(r) = req.as_mut() {
        r.status = run.status;
        r.error = run.error.clone();
        r.finished_at = run.finished_at;
        store.save_request(r)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn tokens_are_distinct_and_url_safe() {
        let tokens: HashSet<String> = (0..10_000).map(|_| generate_request_id()).collect();
        assert_eq!(tokens.len(), 10_000);
        assert!(tokens
            .iter()
            .all(|t| t.len() == TOKEN_LEN && t.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')));
    }

    #[test]
    fn collision_regenerates() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let mut req = CurationRequest {
            id: "taken".into(),
            email: "a@b".into(),
            accession: AccessionRef::pdb("1ABC"),
            mode: RequestMode::Basic,
            selected_subclasses: BTreeSet::new(),
            status: RequestStatus::Queued,
            submitted_at: Utc::now(),
            started_at: None,
            finished_at: None,
            error: None,
        };
        store.save_request(&req).unwrap();
        let mut ids = vec!["fresh".to_string(), "taken".to_string()];
        let id = store
            .allocate(
                || ids.pop().unwrap(),
                |id| {
                    req.id = id.clone();
                    store.save_request(&req)?;
                    Ok(id)
                },
            )
            .unwrap();
        assert_eq!(id, "fresh");
    }
}
