#![no_main]
use libfuzzer_sys::fuzz_target;

// JSONL corpus parser: must reject garbage with an error, never panic, and
// every accepted post must satisfy the corpus invariants.
fuzz_target!(|data: &[u8]| {
    if let Ok(posts) = anxscreen::corpus::parse_jsonl(data, "fuzz") {
        let mut seen = std::collections::HashSet::new();
        for post in &posts {
            assert!(post.label <= 1);
            assert!(!post.id.is_empty());
            assert!(seen.insert(post.id.clone()), "duplicate id accepted");
        }
    }
});
