#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(posts) = anxscreen::corpus::parse_csv(data, "fuzz") {
        let mut seen = std::collections::HashSet::new();
        for post in &posts {
            assert!(post.label <= 1);
            assert!(seen.insert(post.id.clone()), "duplicate id accepted");
        }
    }
});
