//! Append-only JSONL archive of completed exchanges.
//!
//! One line per entry: `{key, prompt, params, response, status, timestamp}`.
//! Existing entries are never rewritten; a rerun that finds its key in the
//! archive reuses the stored response instead of calling the backend again.
//! Only terminal useful outcomes (ok, refused) are archived, so transport
//! failures are retried on resume.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{InferenceParams, ModelIoError, ModelResponse, ResponseStatus};

/// The parameter subset that shapes a completion, denormalised into each
/// archive line for auditability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveParams {
    pub model_id: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    #[serde(default)]
    pub salt: String,
}

impl ArchiveParams {
    pub fn from_params(params: &InferenceParams, salt: &str) -> Self {
        Self {
            model_id: params.model_id.clone(),
            temperature: params.temperature,
            max_output_tokens: params.max_output_tokens,
            salt: salt.to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub key: String,
    pub prompt: String,
    pub params: ArchiveParams,
    pub response: Option<String>,
    pub status: ResponseStatus,
    pub timestamp: u64,
}

impl ArchiveEntry {
    pub fn to_response(&self) -> ModelResponse {
        ModelResponse {
            text: self.response.clone(),
            status: self.status,
            usage: None,
            latency: std::time::Duration::ZERO,
        }
    }
}

struct Inner {
    entries: HashMap<String, ArchiveEntry>,
    writer: Option<BufWriter<File>>,
}

/// Thread-safe archive handle. Writes are serialised; lookups clone.
pub struct ResponseArchive {
    path: PathBuf,
    inner: Mutex<Inner>,
}

fn read_entries(path: &Path) -> Result<HashMap<String, ArchiveEntry>, ModelIoError> {
    let mut entries = HashMap::new();
    if !path.exists() {
        return Ok(entries);
    }
    let file = File::open(path).map_err(|e| ModelIoError::Archive(e.to_string()))?;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ModelIoError::Archive(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: ArchiveEntry = serde_json::from_str(&line).map_err(|e| {
            ModelIoError::Archive(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        // First write wins; duplicates can only come from concurrent
        // appenders and must agree by construction.
        entries.entry(entry.key.clone()).or_insert(entry);
    }
    Ok(entries)
}

impl ResponseArchive {
    /// Open for append, loading any existing entries.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, ModelIoError> {
        let path = path.into();
        let entries = read_entries(&path)?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| ModelIoError::Archive(e.to_string()))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| ModelIoError::Archive(e.to_string()))?;
        Ok(Self {
            path,
            inner: Mutex::new(Inner {
                entries,
                writer: Some(BufWriter::new(file)),
            }),
        })
    }

    /// Load read-only, e.g. as a replay fixture.
    pub fn load(path: impl Into<PathBuf>) -> Result<Self, ModelIoError> {
        let path = path.into();
        let entries = read_entries(&path)?;
        Ok(Self {
            path,
            inner: Mutex::new(Inner {
                entries,
                writer: None,
            }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("archive lock").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<ArchiveEntry> {
        self.inner
            .lock()
            .expect("archive lock")
            .entries
            .get(key)
            .cloned()
    }

    pub fn entries(&self) -> HashMap<String, ArchiveEntry> {
        self.inner.lock().expect("archive lock").entries.clone()
    }

    /// Record an entry. Existing keys are left untouched.
    pub fn record(&self, entry: ArchiveEntry) -> Result<(), ModelIoError> {
        let mut inner = self.inner.lock().expect("archive lock");
        if inner.entries.contains_key(&entry.key) {
            return Ok(());
        }
        if let Some(writer) = inner.writer.as_mut() {
            let line =
                serde_json::to_string(&entry).map_err(|e| ModelIoError::Archive(e.to_string()))?;
            writer
                .write_all(line.as_bytes())
                .and_then(|_| writer.write_all(b"\n"))
                .and_then(|_| writer.flush())
                .map_err(|e| ModelIoError::Archive(e.to_string()))?;
        }
        inner.entries.insert(entry.key.clone(), entry);
        Ok(())
    }
}

pub(super) fn now_epoch_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(key: &str, text: &str) -> ArchiveEntry {
        ArchiveEntry {
            key: key.to_owned(),
            prompt: "p".to_owned(),
            params: ArchiveParams {
                model_id: "m".to_owned(),
                temperature: 0.5,
                max_output_tokens: 5000,
                salt: String::new(),
            },
            response: Some(text.to_owned()),
            status: ResponseStatus::Ok,
            timestamp: 0,
        }
    }

    #[test]
    fn record_then_reload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("responses.jsonl");

        let archive = ResponseArchive::open(&path).unwrap();
        archive.record(entry("k1", "70")).unwrap();
        archive.record(entry("k2", "81")).unwrap();
        drop(archive);

        let archive = ResponseArchive::open(&path).unwrap();
        assert_eq!(archive.len(), 2);
        assert_eq!(archive.get("k1").unwrap().response.as_deref(), Some("70"));

        // Appending again with the same key leaves the file unchanged.
        let before = std::fs::read_to_string(&path).unwrap();
        archive.record(entry("k1", "999")).unwrap();
        let after = std::fs::read_to_string(&path).unwrap();
        assert_eq!(before, after);
        assert_eq!(archive.get("k1").unwrap().response.as_deref(), Some("70"));
    }
}
