//! Recorded oracle answers keyed by canonical query key.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Backend, OracleError, Request};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transcript {
    pub entries: BTreeMap<String, Value>,
}

impl Transcript {
    pub fn load(path: &Path) -> Result<Self, OracleError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| OracleError::Unavailable(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| OracleError::Unavailable(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("transcript serializes");
        text.push('\n');
        text
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}

/// Serves answers from a transcript; never touches the network.
pub struct ReplayBackend {
    transcript: Transcript,
}

impl ReplayBackend {
    pub fn new(transcript: Transcript) -> Self {
        ReplayBackend { transcript }
    }
}

impl Backend for ReplayBackend {
    fn answer(&self, request: &Request) -> Result<Value, OracleError> {
        self.transcript
            .entries
            .get(&request.key)
            .cloned()
            .ok_or_else(|| OracleError::MissingTranscriptEntry {
                key: request.key.clone(),
            })
    }
}

/// Forwards to `inner` and records every successful answer.
pub struct RecordingBackend<B> {
    inner: B,
    recorded: Mutex<Transcript>,
}

impl<B: Backend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        RecordingBackend {
            inner,
            recorded: Mutex::new(Transcript::default()),
        }
    }

    pub fn transcript(&self) -> Transcript {
        self.recorded.lock().expect("transcript lock").clone()
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    fn answer(&self, request: &Request) -> Result<Value, OracleError> {
        let v = self.inner.answer(request)?;
        self.recorded
            .lock()
            .expect("transcript lock")
            .entries
            .insert(request.key.clone(), v.clone());
        Ok(v)
    }
}
