//! Content-addressed replay cache: one JSON file per request digest.
//!
//! The digest covers exactly the fields that determine a completion
//! (model, messages, temperature, max output tokens) and excludes the audit
//! tag. Writes go through a temp file and an atomic rename, so concurrent
//! writers of the same key are safe.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatRequest, ChatResponse, GatewayError, Message};

/// The subset of a request that determines its completion.
#[derive(Serialize)]
struct KeyView<'a> {
    model_id: &'a str,
    messages: &'a [Message],
    temperature: Option<f64>,
    max_output_tokens: Option<u32>,
}

/// Stable hex digest of the completion-determining request fields.
pub fn cache_key(request: &ChatRequest) -> String {
    let view = KeyView {
        model_id: &request.model_id,
        messages: &request.messages,
        temperature: request.temperature,
        max_output_tokens: request.max_output_tokens,
    };
    let bytes = serde_json::to_vec(&view).expect("key view serialization is infallible");
    hex::encode(Sha256::digest(&bytes))
}

/// One cache file: the request snapshot plus its response.
#[derive(Debug, Serialize, Deserialize)]
pub struct CacheEntry {
    pub request: ChatRequest,
    pub response: ChatResponse,
}

/// A directory of response files keyed by request digest.
///
/// With `repair` set, unreadable entries are treated as misses (and
/// overwritten on the next store); otherwise they surface as
/// [`GatewayError::CacheCorrupt`].
#[derive(Debug, Clone)]
pub struct ReplayCache {
    dir: PathBuf,
    repair: bool,
}

impl ReplayCache {
    pub fn open(dir: impl Into<PathBuf>, repair: bool) -> Result<Self, GatewayError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(ReplayCache { dir, repair })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Looks up a stored response. Missing file → `Ok(None)`.
    pub fn load(&self, key: &str) -> Result<Option<ChatResponse>, GatewayError> {
        let path = self.entry_path(key);
        let raw = match fs::read_to_string(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        match serde_json::from_str::<CacheEntry>(&raw) {
            Ok(entry) => Ok(Some(entry.response)),
            Err(e) if self.repair => {
                log::warn!("discarding corrupt cache entry {key}: {e}");
                Ok(None)
            }
            Err(e) => Err(GatewayError::CacheCorrupt {
                key: key.to_owned(),
                reason: e.to_string(),
            }),
        }
    }

    /// Persists a response atomically (write temp file, then rename).
    pub fn store(
        &self,
        key: &str,
        request: &ChatRequest,
        response: &ChatResponse,
    ) -> Result<(), GatewayError> {
        let entry = CacheEntry {
            request: request.clone(),
            response: response.clone(),
        };
        let body = serde_json::to_vec_pretty(&entry).expect("entry serialization is infallible");
        let tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        fs::write(tmp.path(), &body)?;
        tmp.persist(self.entry_path(key))
            .map_err(|e| GatewayError::Io(e.error))?;
        Ok(())
    }

    /// Number of entries currently on disk.
    pub fn len(&self) -> Result<usize, GatewayError> {
        let mut n = 0;
        for entry in fs::read_dir(&self.dir)? {
            let entry = entry?;
            if entry.path().extension().is_some_and(|e| e == "json") {
                n += 1;
            }
        }
        Ok(n)
    }

    pub fn is_empty(&self) -> Result<bool, GatewayError> {
        Ok(self.len()? == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::TokenUsage;

    fn request(content: &str, tag: &str) -> ChatRequest {
        ChatRequest {
            model_id: "m".to_owned(),
            messages: vec![Message::user(content)],
            temperature: Some(0.7),
            max_output_tokens: Some(100),
            tag: tag.to_owned(),
        }
    }

    fn response(text: &str) -> ChatResponse {
        ChatResponse {
            text: text.to_owned(),
            usage: TokenUsage {
                input_tokens: 10,
                reasoning_tokens: 0,
                output_tokens: 5,
            },
            model_id: "m".to_owned(),
            latency_ms: 42,
            from_cache: false,
        }
    }

    #[test]
    fn identical_requests_share_a_key() {
        assert_eq!(cache_key(&request("q", "a")), cache_key(&request("q", "a")));
    }

    #[test]
    fn tag_is_excluded_from_key() {
        assert_eq!(
            cache_key(&request("q", "run-1")),
            cache_key(&request("q", "run-2"))
        );
    }

    #[test]
    fn any_content_change_changes_key() {
        let base = cache_key(&request("q", ""));
        assert_ne!(base, cache_key(&request("q!", "")));
        let mut r = request("q", "");
        r.temperature = Some(0.8);
        assert_ne!(base, cache_key(&r));
        let mut r = request("q", "");
        r.max_output_tokens = None;
        assert_ne!(base, cache_key(&r));
        let mut r = request("q", "");
        r.model_id = "m2".to_owned();
        assert_ne!(base, cache_key(&r));
    }

    #[test]
    fn single_character_perturbations_never_collide() {
        let base = request(&"x".repeat(64), "");
        let base_key = cache_key(&base);
        let mut keys = std::collections::BTreeSet::new();
        keys.insert(base_key);
        for i in 0..64 {
            let mut content: Vec<u8> = "x".repeat(64).into_bytes();
            content[i] = b'y';
            let r = request(std::str::from_utf8(&content).unwrap(), "");
            assert!(keys.insert(cache_key(&r)), "collision at position {i}");
        }
    }

    #[test]
    fn store_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ReplayCache::open(dir.path(), false).unwrap();
        let req = request("q", "");
        let key = cache_key(&req);
        assert!(cache.load(&key).unwrap().is_none());
        cache.store(&key, &req, &response("**Answer**: (B)")).unwrap();
        let hit = cache.load(&key).unwrap().unwrap();
        assert_eq!(hit.text, "**Answer**: (B)");
        assert_eq!(hit.usage.input_tokens, 10);
    }

    #[test]
    fn truncated_entry_is_corrupt_unless_repairing() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ReplayCache::open(dir.path(), false).unwrap();
        let req = request("q", "");
        let key = cache_key(&req);
        cache.store(&key, &req, &response("A")).unwrap();
        // Truncate the file mid-JSON.
        let path = dir.path().join(format!("{key}.json"));
        let full = std::fs::read(&path).unwrap();
        std::fs::write(&path, &full[..full.len() / 2]).unwrap();

        assert!(matches!(
            cache.load(&key),
            Err(GatewayError::CacheCorrupt { .. })
        ));

        let repairing = ReplayCache::open(dir.path(), true).unwrap();
        assert!(repairing.load(&key).unwrap().is_none());
    }

    #[test]
    fn distinct_requests_create_distinct_files() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ReplayCache::open(dir.path(), false).unwrap();
        for i in 0..5 {
            let req = request(&format!("q{i}"), "");
            cache.store(&cache_key(&req), &req, &response("A")).unwrap();
        }
        assert_eq!(cache.len().unwrap(), 5);
    }

    #[test]
    fn concurrent_writers_of_same_key_leave_valid_entry() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ReplayCache::open(dir.path(), false).unwrap();
        let req = request("q", "");
        let key = cache_key(&req);
        std::thread::scope(|scope| {
            for _ in 0..8 {
                let cache = &cache;
                let req = &req;
                let key = &key;
                scope.spawn(move || {
                    cache.store(key, req, &response("A")).unwrap();
                });
            }
        });
        assert_eq!(cache.load(&key).unwrap().unwrap().text, "A");
        assert_eq!(cache.len().unwrap(), 1);
    }
}
