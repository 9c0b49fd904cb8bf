use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransportError {
    #[error("not found: {0}")]
    NotFound(String),
    /// Connection problems, timeouts and 5xx responses; worth retrying.
    #[error("network failure: {0}")]
    Retryable(String),
    #[error("request failed: {0}")]
    Fatal(String),
}

/// Blocking GET used for every remote interaction.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<Vec<u8>, TransportError>;
}

const MAX_BODY: u64 = 512 * 1024 * 1024;

pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder().timeout_global(Some(timeout)).build();
        HttpTransport {
            agent: ureq::Agent::new_with_config(config),
        }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(120))
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<Vec<u8>, TransportError> {
        match self.agent.get(url).call() {
            Ok(mut resp) => resp
                .body_mut()
                .with_config()
                .limit(MAX_BODY)
                .read_to_vec()
                .map_err(|e| TransportError::Retryable(e.to_string())),
            Err(ureq::Error::StatusCode(404 | 410)) => Err(TransportError::NotFound(url.to_string())),
            Err(ureq::Error::StatusCode(code)) if code >= 500 || code == 429 => {
                Err(TransportError::Retryable(format!("{url}: http {code}")))
            }
            Err(ureq::Error::StatusCode(code)) => Err(TransportError::Fatal(format!("{url}: http {code}"))),
            Err(e) => Err(TransportError::Retryable(format!("{url}: {e}"))),
        }
    }
}

/// Transport that refuses everything; offline runs are wired to it.
pub struct NoNetwork;

impl Transport for NoNetwork {
    fn get(&self, url: &str) -> Result<Vec<u8>, TransportError> {
        Err(TransportError::Fatal(format!("network disabled: {url}")))
    }
}

/// In-memory transport that records every request. Unknown URLs answer
/// with the configured fallback error.
pub struct RecordingTransport {
    responses: HashMap<String, Result<Vec<u8>, TransportError>>,
    fallback: TransportError,
    log: Mutex<Vec<String>>,
    delay: Duration,
}

impl RecordingTransport {
    pub fn new() -> Self {
        RecordingTransport {
            responses: HashMap::new(),
            fallback: TransportError::NotFound("unregistered".into()),
            log: Mutex::new(Vec::new()),
            delay: Duration::ZERO,
        }
    }

    pub fn respond(mut self, url: &str, body: impl Into<Vec<u8>>) -> Self {
        self.responses.insert(url.to_string(), Ok(body.into()));
        self
    }

    pub fn fail(mut self, url: &str, err: TransportError) -> Self {
        self.responses.insert(url.to_string(), Err(err));
        self
    }

    pub fn fallback(mut self, err: TransportError) -> Self {
        self.fallback = err;
        self
    }

    /// Sleep on every request, to widen race windows in tests.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn requests(&self) -> Vec<String> {
        self.log.lock().expect("log lock").clone()
    }
}

impl Default for RecordingTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl Transport for RecordingTransport {
    fn get(&self, url: &str) -> Result<Vec<u8>, TransportError> {
        self.log.lock().expect("log lock").push(url.to_string());
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        self.responses
            .get(url)
            .cloned()
            .unwrap_or_else(|| Err(self.fallback.clone()))
    }
}
