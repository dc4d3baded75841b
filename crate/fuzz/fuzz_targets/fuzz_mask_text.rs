#![no_main]
use libfuzzer_sys::fuzz_target;
use anxscreen::masking::{contains_keyword, mask_text, KeywordList, MASK_TOKEN};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let keywords = KeywordList::default_builtin();
    let once = mask_text(text, &keywords, MASK_TOKEN);
    let twice = mask_text(&once, &keywords, MASK_TOKEN);
    assert_eq!(once, twice, "masking not idempotent");
    assert!(!contains_keyword(&once, &keywords), "keywords survive masking");
});
