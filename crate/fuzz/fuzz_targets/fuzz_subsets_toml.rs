#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(subsets) = anxscreen::experiments::parse_subsets(text) {
        // accepted specs expose only known, deduplicated features
        for s in &subsets {
            let idx = s.validate().expect("accepted subset revalidates");
            assert!(!idx.is_empty());
        }
    }
});
