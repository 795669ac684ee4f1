//! On-disk response cache: one JSON file per cache key, checksummed.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use trates_core::llm::{CacheKey, CompletionRequest, Gateway, LlmError};

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    key: String,
    model_id: String,
    template: String,
    checksum: String,
    response: String,
}

fn checksum(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone)]
pub struct DiskCache {
    dir: PathBuf,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl DiskCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        DiskCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, key: &CacheKey) -> PathBuf {
        let k = key.as_str();
        self.dir.join(&k[..2.min(k.len())]).join(format!("{k}.json"))
    }

    /// Stored response, or `None` on a miss. Unreadable or corrupt entries are misses.
    pub fn get(&self, key: &CacheKey) -> Option<String> {
        let path = self.path(key);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return None,
            Err(e) => {
                log::warn!("cache entry {}: {e}; treating as a miss", path.display());
                return None;
            }
        };
        match serde_json::from_slice::<Entry>(&bytes) {
            Ok(entry) if entry.key == key.as_str() && entry.checksum == checksum(&entry.response) => {
                Some(entry.response)
            }
            Ok(_) => {
                log::warn!("cache entry {}: checksum mismatch; recomputing", path.display());
                None
            }
            Err(e) => {
                log::warn!("cache entry {}: unreadable ({e}); recomputing", path.display());
                None
            }
        }
    }

    /// Writes to a temporary file, then renames it over the entry.
    pub fn put(&self, key: &CacheKey, request: &CompletionRequest, response: &str) -> std::io::Result<()> {
        let path = self.path(key);
        let parent = path.parent().expect("entry path has a parent");
        std::fs::create_dir_all(parent)?;
        let entry = Entry {
            key: key.as_str().to_string(),
            model_id: request.model_id.clone(),
            template: request.template.name().to_string(),
            checksum: checksum(response),
            response: response.to_string(),
        };
        let tmp = parent.join(format!(
            ".{}.{}.{}.tmp",
            key.as_str(),
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&serde_json::to_vec(&entry).expect("entry serializes"))?;
        f.sync_all()?;
        drop(f);
        std::fs::rename(&tmp, &path)
    }
}

/// A gateway that consults the cache before the backend.
pub struct CachedGateway<G> {
    pub inner: G,
    pub cache: DiskCache,
    hits: AtomicUsize,
    misses: AtomicUsize,
    backend_calls: AtomicUsize,
}

impl<G: Gateway> CachedGateway<G> {
    pub fn new(inner: G, cache: DiskCache) -> Self {
        CachedGateway {
            inner,
            cache,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
            backend_calls: AtomicUsize::new(0),
        }
    }

    /// Response text and whether it came from the cache.
    ///
    /// Requests with a nonzero temperature skip the lookup but are still stored.
    pub fn cached_complete(&self, request: &CompletionRequest) -> Result<(String, bool), LlmError> {
        let key = request.key();
        if request.temperature == 0.0 {
            if let Some(text) = self.cache.get(&key) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return Ok((text, true));
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let text = self.call_backend(request)?;
        self.cache
            .put(&key, request, &text)
            .map_err(|e| LlmError::Cache(format!("writing {}: {e}", self.cache.path(&key).display())))?;
        Ok((text, false))
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    /// Requests that reached the backend, including refreshes.
    pub fn backend_calls(&self) -> usize {
        self.backend_calls.load(Ordering::Relaxed)
    }

    fn call_backend(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        self.backend_calls.fetch_add(1, Ordering::Relaxed);
        self.inner.complete(request)
    }
}

impl<G: Gateway> Gateway for CachedGateway<G> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        self.cached_complete(request).map(|(t, _)| t)
    }
}

/// Skips cache lookups but stores every response, replacing older entries.
pub struct Refresh<'a, G>(pub &'a CachedGateway<G>);

impl<G: Gateway> Gateway for Refresh<'_, G> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        let text = self.0.call_backend(request)?;
        let key = request.key();
        self.0
            .cache
            .put(&key, request, &text)
            .map_err(|e| LlmError::Cache(format!("writing {}: {e}", self.0.cache.path(&key).display())))?;
        Ok(text)
    }
}
