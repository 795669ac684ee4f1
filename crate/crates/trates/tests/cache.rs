use std::sync::atomic::{AtomicUsize, Ordering};

use proptest::prelude::*;
use tempfile::TempDir;
use trates::cache::{CachedGateway, DiskCache, Refresh};
use trates_core::llm::{question_generation_request, CompletionRequest, Gateway, LlmError, MockLlm};

struct Counting<G>(G, AtomicUsize);

impl<G: Gateway> Gateway for Counting<G> {
    fn complete(&self, r: &CompletionRequest) -> Result<String, LlmError> {
        self.1.fetch_add(1, Ordering::SeqCst);
        self.0.complete(r)
    }
}

fn request(rubric: &str) -> CompletionRequest {
    question_generation_request("m", "organization", "8th", rubric)
}

#[test]
fn hit_after_miss_and_key_sensitivity() {
    let dir = TempDir::new().unwrap();
    let gw = CachedGateway::new(Counting(MockLlm::new(1), AtomicUsize::new(0)), DiskCache::new(dir.path()));
    let (a, hit_a) = gw.cached_complete(&request("Clear structure.")).unwrap();
    let (b, hit_b) = gw.cached_complete(&request("Clear structure.")).unwrap();
    assert_eq!((a.as_str(), hit_a, hit_b), (b.as_str(), false, true));
    let (_, hit_c) = gw.cached_complete(&request("Clear organization.")).unwrap();
    assert!(!hit_c);
    assert_eq!(gw.inner.1.load(Ordering::SeqCst), 2);
    // Refresh bypasses the lookup.
    Refresh(&gw).complete(&request("Clear structure.")).unwrap();
    assert_eq!(gw.inner.1.load(Ordering::SeqCst), 3);
    assert_eq!(gw.backend_calls(), 3);
}

#[test]
fn corrupt_entries_are_recomputed_and_rewritten() {
    let dir = TempDir::new().unwrap();
    let gw = CachedGateway::new(Counting(MockLlm::new(1), AtomicUsize::new(0)), DiskCache::new(dir.path()));
    let r = request("Rubric body.");
    let (text, _) = gw.cached_complete(&r).unwrap();
    let path = gw.cache.path(&r.key());
    let stored = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, stored.replace("How would", "How could")).unwrap();
    let (again, hit) = gw.cached_complete(&r).unwrap();
    assert!(!hit);
    assert_eq!(again, text);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stored);
    std::fs::write(&path, b"{not json").unwrap();
    assert!(!gw.cached_complete(&r).unwrap().1);
    assert!(gw.cached_complete(&r).unwrap().1);
}

#[test]
fn concurrent_writers_leave_a_valid_entry() {
    let dir = TempDir::new().unwrap();
    let cache = DiskCache::new(dir.path());
    let r = request("Shared.");
    std::thread::scope(|s| {
        for _ in 0..8 {
            s.spawn(|| {
                for _ in 0..20 {
                    cache.put(&r.key(), &r, "same payload").unwrap();
                }
            });
        }
    });
    assert_eq!(cache.get(&r.key()).as_deref(), Some("same payload"));
    let leftovers = std::fs::read_dir(cache.path(&r.key()).parent().unwrap())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".tmp"))
        .count();
    assert_eq!(leftovers, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn round_trip_is_byte_identical(payload in any::<String>(), word in "[a-z]{1,12}") {
        let dir = TempDir::new().unwrap();
        let cache = DiskCache::new(dir.path());
        let r = request(&word);
        cache.put(&r.key(), &r, &payload).unwrap();
        prop_assert_eq!(cache.get(&r.key()), Some(payload));
    }
}
