//! Replay and recording backends.

use std::path::Path;
use std::sync::Arc;

use super::archive::now_epoch_secs;
use super::{
    archive_key, ArchiveEntry, ArchiveParams, Backend, CompletionRequest, ModelIoError,
    ModelResponse, ResponseArchive, ResponseStatus,
};

/// Answers every completion from an archived prompt-to-response store.
/// Unknown keys are transport errors, so a replay run can never silently
/// invent data.
pub struct ReplayBackend {
    archive: ResponseArchive,
}

impl ReplayBackend {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ModelIoError> {
        Ok(Self {
            archive: ResponseArchive::load(path.as_ref().to_path_buf())?,
        })
    }

    pub fn from_archive(archive: ResponseArchive) -> Self {
        Self { archive }
    }
}

impl Backend for ReplayBackend {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<ModelResponse, ModelIoError> {
        let key = archive_key(request.prompt, request.params, request.salt);
        match self.archive.get(&key) {
            Some(entry) => Ok(entry.to_response()),
            None => Err(ModelIoError::NoFixture { key }),
        }
    }

    fn describe(&self) -> String {
        format!("replay:{}", self.archive.path().display())
    }
}

/// Wraps another backend with an archive: hits answer from the archive
/// without touching the inner backend, misses are forwarded and recorded.
/// This is what makes interrupted runs resumable.
pub struct RecordingBackend {
    inner: Arc<dyn Backend>,
    archive: Arc<ResponseArchive>,
}

impl RecordingBackend {
    pub fn new(inner: Arc<dyn Backend>, archive: Arc<ResponseArchive>) -> Self {
        Self { inner, archive }
    }
}

impl Backend for RecordingBackend {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<ModelResponse, ModelIoError> {
        let key = archive_key(request.prompt, request.params, request.salt);
        if let Some(entry) = self.archive.get(&key) {
            return Ok(entry.to_response());
        }
        let response = self.inner.complete(request)?;
        if matches!(response.status, ResponseStatus::Ok | ResponseStatus::Refused) {
            self.archive.record(ArchiveEntry {
                key,
                prompt: request.prompt.to_owned(),
                params: ArchiveParams::from_params(request.params, request.salt),
                response: response.text.clone(),
                status: response.status,
                timestamp: now_epoch_secs(),
            })?;
        }
        Ok(response)
    }

    fn describe(&self) -> String {
        format!("recording({})", self.inner.describe())
    }
}
