use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{fingerprint, ChatBackend, ChatRequest, ChatResponse, GatewayError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub fingerprint: String,
    pub response: ChatResponse,
}

/// Recorded responses keyed by request fingerprint, in recording order.
#[derive(Debug, Clone, Default)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
    index: HashMap<String, usize>,
}

impl Transcript {
    /// Reads one JSON entry per line. A fingerprint recorded twice must carry
    /// the same response.
    pub fn load(path: &Path) -> Result<Transcript> {
        if !path.exists() {
            return Err(GatewayError::Config(format!("transcript not found: {}", path.display())));
        }
        let text = fs::read_to_string(path)?;
        let mut t = Transcript::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err =
                |reason: String| GatewayError::Transcript { path: path.display().to_string(), line: i + 1, reason };
            let entry: TranscriptEntry = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            if let Some(prev) = t.get(&entry.fingerprint) {
                if prev != &entry.response {
                    return Err(err(format!("conflicting responses for {}", entry.fingerprint)));
                }
                continue;
            }
            t.insert(entry.fingerprint, entry.response);
        }
        Ok(t)
    }

    pub fn get(&self, fingerprint: &str) -> Option<&ChatResponse> {
        self.index.get(fingerprint).map(|&i| &self.entries[i].response)
    }

    /// Adds an entry unless the fingerprint is already present.
    pub fn insert(&mut self, fingerprint: String, response: ChatResponse) -> bool {
        if self.index.contains_key(&fingerprint) {
            return false;
        }
        self.index.insert(fingerprint.clone(), self.entries.len());
        self.entries.push(TranscriptEntry { fingerprint, response });
        true
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path)?;
        for e in &self.entries {
            writeln!(f, "{}", serde_json::to_string(e).expect("entry serializes"))?;
        }
        Ok(())
    }
}

pub struct ReplayBackend {
    transcript: Transcript,
}

impl ReplayBackend {
    pub fn new(transcript: Transcript) -> Self {
        Self { transcript }
    }

    pub fn open(path: &Path) -> Result<Self> {
        Ok(Self::new(Transcript::load(path)?))
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse> {
        let fp = fingerprint(request);
        self.transcript.get(&fp).cloned().ok_or(GatewayError::ReplayMiss { fingerprint: fp })
    }
}

/// Forwards to `inner` and appends each new (fingerprint, response) pair to
/// the transcript file. An existing file is extended, not replaced.
pub struct RecordBackend {
    inner: Box<dyn ChatBackend>,
    path: PathBuf,
    state: Mutex<(Transcript, File)>,
}

impl RecordBackend {
    pub fn open(inner: Box<dyn ChatBackend>, path: &Path) -> Result<Self> {
        let transcript = if path.exists() { Transcript::load(path)? } else { Transcript::default() };
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { inner, path: path.to_path_buf(), state: Mutex::new((transcript, file)) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl ChatBackend for RecordBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse> {
        let response = self.inner.complete(request)?;
        let fp = fingerprint(request);
        let mut guard = self.state.lock().expect("transcript lock");
        let (transcript, file) = &mut *guard;
        if transcript.insert(fp.clone(), response.clone()) {
            let entry = TranscriptEntry { fingerprint: fp, response: response.clone() };
            writeln!(file, "{}", serde_json::to_string(&entry).expect("entry serializes"))?;
            file.flush()?;
        }
        Ok(response)
    }

    fn network_calls(&self) -> usize {
        self.inner.network_calls()
    }
}
