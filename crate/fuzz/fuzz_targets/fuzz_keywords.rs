#![no_main]
use libfuzzer_sys::fuzz_target;
use anxscreen::masking::{mask_text, KeywordList, MASK_TOKEN};

// Keyword-list parser plus the masking invariants under arbitrary lists.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(list) = KeywordList::parse(text) else { return };
    let sample = "I was worried about r/anxiety and racing thoughts [MASK] ok";
    let once = mask_text(sample, &list, MASK_TOKEN);
    let twice = mask_text(&once, &list, MASK_TOKEN);
    assert_eq!(once, twice, "masking not idempotent for list {list:?}");
});
